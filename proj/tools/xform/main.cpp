// xform: synth | estimate | complement | policy | eval
//
// Exit statuses: 0 success, 2 config or input error, 3 runtime abort,
// 4 infeasible request.

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "xform/error.hpp"

namespace {

enum Exit { kOk = 0, kInput = 2, kAbort = 3, kInfeasible = 4 };

int run(CLI::App& app, int argc, char** argv) {
  using namespace xform::cli;
  SynthOptions synth;
  EstimateOptions estimate;
  ComplementOptions complement;
  PolicyOptions policy;
  EvalOptions eval;
  std::uint64_t seed = 0;
  std::size_t count = 0;

  auto* s = app.add_subcommand("synth", "Render a synthetic transformed-shape dataset");
  s->add_option("--config", synth.config, "JSON config with a \"synthetic\" section");
  auto* s_seed = s->add_option("--seed", seed, "Overrides synthetic.seed");
  auto* s_samples = s->add_option("--samples", count, "Overrides synthetic.samples");
  s->add_option("--out", synth.out, "Output directory")->required();

  auto* e = app.add_subcommand("estimate", "Fit the mapping network and write its parameter histograms");
  e->add_option("--config", estimate.config, "JSON config with an \"estimator\" section");
  auto* e_seed = e->add_option("--seed", seed, "Overrides estimator.seed");
  e->add_option("--preset", estimate.preset, "desk | paper | smoke")
      ->check(CLI::IsMember({"desk", "paper", "smoke"}));
  auto* e_iters = e->add_option("--iterations", count, "Overrides estimator.iterations");
  e->add_option("--reference", estimate.reference, "File of reference image indices, one per line");
  e->add_option("--data", estimate.data, "Dataset directory (images.idx, labels.idx[, params.csv])")->required();
  e->add_option("--out", estimate.out, "Output directory")->required();

  auto* c = app.add_subcommand("complement", "Complement every histogram in a histogram CSV");
  c->add_option("--input", complement.input, "Histogram CSV")->required();
  c->add_option("--out", complement.out, "Output directory")->required();

  auto* p = app.add_subcommand("policy", "Build a pretext-task policy");
  p->add_option("--input", policy.input, "Complement histogram CSV");
  p->add_option("--task", policy.task, "Parameter name or 'translation'")->required();
  p->add_option("--k", policy.k, "Number of instances, identity included");
  p->add_option("--mode", policy.mode, "manual | automated")->check(CLI::IsMember({"manual", "automated"}));
  p->add_option("--seed", policy.seed, "Sampling seed");
  p->add_option("--snap", policy.snap, "Round instances to multiples of this physical quantum");
  p->add_option("--eps", policy.eps, "Manual-mode relative density threshold");
  p->add_flag("--degrees", policy.degrees, "Rotation --values and --snap are in degrees");
  p->add_option("--values", policy.values, "Explicit instance values (physical units)")->delimiter(',');
  p->add_option("--out", policy.out, "Output directory")->required();

  auto* v = app.add_subcommand("eval", "Pretext training and linear-probe evaluation of policies");
  v->add_option("--config", eval.config, "JSON config with an \"eval\" section");
  v->add_option("--policy", eval.policies, "Policy JSON (repeatable)")->required();
  v->add_option("--seeds", eval.seeds, "Comma-separated seeds")->delimiter(',');
  v->add_option("--pretext-epochs", eval.pretext_epochs, "Overrides eval.pretext_epochs");
  v->add_option("--probe-epochs", eval.probe_epochs, "Overrides eval.probe_epochs");
  v->add_option("--data", eval.data, "Dataset directory")->required();
  v->add_option("--out", eval.out, "Output directory")->required();

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (s->parsed()) {
      if (*s_seed) synth.seed = seed;
      if (*s_samples) synth.samples = count;
      cmd_synth(synth);
    } else if (e->parsed()) {
      if (*e_seed) estimate.seed = seed;
      if (*e_iters) estimate.iterations = count;
      cmd_estimate(estimate);
    } else if (c->parsed()) {
      cmd_complement(complement);
    } else if (p->parsed()) {
      cmd_policy(policy);
    } else if (v->parsed()) {
      cmd_eval(eval);
    }
  } catch (const xform::Infeasible& ex) {
    std::cerr << "xform: infeasible: " << ex.what() << "\n";
    return kInfeasible;
  } catch (const xform::TrainingAborted& ex) {
    std::cerr << "xform: aborted: " << ex.what() << "\n";
    return kAbort;
  } catch (const xform::InvalidInput& ex) {
    std::cerr << "xform: invalid input: " << ex.what() << "\n";
    return kInput;
  } catch (const xform::ShapeError& ex) {
    std::cerr << "xform: invalid input: " << ex.what() << "\n";
    return kInput;
  } catch (const nlohmann::json::exception& ex) {
    std::cerr << "xform: invalid input: " << ex.what() << "\n";
    return kInput;
  } catch (const std::exception& ex) {
    std::cerr << "xform: error: " << ex.what() << "\n";
    return kAbort;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate transformation distributions and build non-conflicting pretext tasks"};
  return run(app, argc, argv);
}
