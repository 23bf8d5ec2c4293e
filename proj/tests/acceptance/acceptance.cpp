// Acceptance suite: one PASS/FAIL line per criterion.
//
//   xform_acceptance                 all criteria
//   xform_acceptance --criterion 3   one criterion
//
// Exit status is 0 when every selected criterion passes.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "fixtures.hpp"
#include "grad_suite.hpp"
#include "json.hpp"
#include "xform/ad/engine.hpp"
#include "xform/ad/ops.hpp"
#include "xform/data/synthetic.hpp"
#include "xform/dist/histogram.hpp"
#include "xform/gan/estimator.hpp"
#include "xform/io.hpp"
#include "xform/pretext/eval.hpp"
#include "xform/transforms/color.hpp"
#include "xform/transforms/geometric.hpp"

namespace {

using namespace xform;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------

Outcome gradient_suite_criterion() {
  const auto start = Clock::now();
  std::size_t failed = 0, total = 0;
  std::string worst_name;
  double worst_ratio = 0.0;
  for (const auto& c : testing::gradient_suite()) {
    ++total;
    const auto r = c.run();
    const double ratio = r.max_rel_error / c.tol;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_name = c.name + " (" + fmt(r.max_rel_error, 3) + " vs " + fmt(c.tol, 2) + ")";
    }
    if (!r.passed(c.tol)) {
      ++failed;
      std::cerr << "  gradient check failed: " << c.name << " " << r.worst_input << " rel " << r.max_rel_error << "\n";
    }
  }
  const double secs = seconds_since(start);
  return {failed == 0 && secs < 60.0, std::to_string(total - failed) + "/" + std::to_string(total) +
                                          " cases within tolerance, closest " + worst_name + ", " + fmt(secs, 3) +
                                          " s (limit 60 s)"};
}

// ---------------------------------------------------------------------------

Outcome distribution_oracle_criterion() {
  const auto start = Clock::now();
  const auto fx = testing::load_fixture("histogram.json");
  auto hist = [](const nlohmann::json& j) {
    return dist::ParamHistogram::from_weights(tf::ParamId::rotation, testing::doubles(j["weights"]));
  };
  constexpr double kExact = 1e-12;
  double worst = 0.0;
  auto compare = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  for (const auto& c : fx["complement"]) {
    const auto q = dist::complement_histogram(hist(c));
    const auto expected = testing::doubles(c["expected"]);
    for (std::size_t k = 0; k < expected.size(); ++k) compare(q.densities[k], expected[k]);
  }
  for (const auto& c : fx["cdf"]) {
    const auto f = dist::cdf(hist(c));
    const auto expected = testing::doubles(c["expected"]);
    for (std::size_t k = 0; k < expected.size(); ++k) compare(f[k], expected[k]);
  }
  for (const auto& c : fx["inverse_cdf"]) {
    const auto h = hist(c);
    const auto f = dist::cdf(h);
    const auto u = testing::doubles(c["u"]);
    const auto expected = testing::doubles(c["expected"]);
    for (std::size_t i = 0; i < u.size(); ++i) compare(dist::inverse_cdf(h, f, u[i]), expected[i]);
  }
  bool ranges_ok = true;
  for (const auto& c : fx["manual_ranges"]) {
    const auto ranges = dist::manual_policy_ranges(hist(c), c["eps"]);
    const auto& expected = c["expected"];
    ranges_ok = ranges_ok && ranges.size() == expected.size();
    for (std::size_t i = 0; ranges_ok && i < ranges.size(); ++i) {
      compare(ranges[i].lo_normalized, expected[i][0].get<double>());
      compare(ranges[i].hi_normalized, expected[i][1].get<double>());
    }
  }

  Rng rng(20240611);
  double worst_ks = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(50);
    for (double& v : w) v = uniform01(rng);
    const auto h = dist::ParamHistogram::from_weights(tf::ParamId::tx, w);
    const auto fh = dist::cdf(h);
    std::vector<double> draws(100000);
    for (double& v : draws) v = uniform01(rng);
    const auto x = dist::inverse_transform_sample(h, draws);
    worst_ks = std::max(worst_ks, dist::ks_statistic(x, [&](double v) {
      const std::size_t k = h.bin_of(v);
      return fh[k] + (v - h.edge(k)) * h.densities[k];
    }));
  }
  const double secs = seconds_since(start);
  const bool pass = ranges_ok && worst <= kExact && worst_ks < 0.02 && secs < 60.0;
  return {pass, "fixture max deviation " + fmt(worst, 3) + " (limit 1e-12), worst KS " + fmt(worst_ks, 4) +
                    " over 20 histograms x 100000 samples (limit 0.02), " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------

data::LabeledImageSet rotation_dataset() {
  data::SyntheticSpec spec;
  spec.classes = 4;
  spec.image_size = 32;
  spec.samples = 5000;
  spec.seed = 0;
  spec.distributions[tf::ParamId::rotation] = data::ParamDistribution::uniform(0.0, 120.0 * kPi / 180.0);
  return data::generate_synthetic_dataset(spec);
}

Outcome recovery_criterion(const fs::path& work) {
  const auto data = rotation_dataset();
  const double support_hi = tf::normalize_unit(tf::ParamId::rotation, 120.0 * kPi / 180.0);
  int passing = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto start = Clock::now();
    auto cfg = gan::EstimatorConfig::preset("desk");
    cfg.seed = seed;
    const auto reference = data.subset(data::select_reference_indices(data, cfg.refs_per_class, seed));
    const auto result = gan::train_estimator(cfg, data, reference);
    const auto hists = dist::estimate_histogram(result.generator, cfg.hist_samples, cfg.hist_bins,
                                                derive_seed(seed, 4));
    fs::create_directories(work);
    dist::write_histogram_csv(work / ("recovery_seed" + std::to_string(seed) + ".csv"), hists);
    const auto& rot = dist::find_histogram(hists, tf::ParamId::rotation);
    const double w = rot.bin_width();
    const double rot_mass = rot.mass_between(0.0 - w, support_hi + w);
    double near_identity = 1.0;
    for (auto id : {tf::ParamId::tx, tf::ParamId::ty, tf::ParamId::scale}) {
      near_identity = std::min(near_identity, dist::find_histogram(hists, id).mass_between(-0.1, 0.1));
    }
    const bool ok = rot_mass >= 0.70 && near_identity >= 0.60;
    passing += ok;
    std::cerr << "  recovery seed " << seed << ": rotation mass in support " << rot_mass
              << ", min tx/ty/scale mass within 0.1 " << near_identity << ", " << seconds_since(start) << " s\n";
    detail += (seed ? "; " : "") + std::string("seed ") + std::to_string(seed) + " rotation " + fmt(rot_mass, 3) +
              " identity " + fmt(near_identity, 3) + (ok ? " ok" : " short");
  }
  return {passing >= 2, std::to_string(passing) + "/3 seeds meet rotation >= 0.70 and tx/ty/scale >= 0.60 (" +
                            detail + ")"};
}

// ---------------------------------------------------------------------------

Outcome conflict_direction_criterion() {
  const auto data = rotation_dataset();
  const pretext::EvalConfig cfg;
  const auto complementary = dist::make_policy("rotation", std::vector<double>{kPi});
  const auto conflicting = dist::make_policy("rotation", std::vector<double>{kPi / 2.0});
  double sum_c = 0.0, sum_x = 0.0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto start = Clock::now();
    const auto a = pretext::evaluate_policy(complementary, data, seed, cfg);
    const auto b = pretext::evaluate_policy(conflicting, data, seed, cfg);
    sum_c += a.probe_acc;
    sum_x += b.probe_acc;
    std::cerr << "  seed " << seed << ": {0,180} probe " << a.probe_acc << " (pretext " << a.pretext_acc
              << "), {0,90} probe " << b.probe_acc << " (pretext " << b.pretext_acc << "), " << seconds_since(start)
              << " s\n";
    detail += (seed ? "; " : "") + std::string("seed ") + std::to_string(seed) + " " + fmt(a.probe_acc, 4) + " vs " +
              fmt(b.probe_acc, 4);
  }
  const double margin = (sum_c - sum_x) / 3.0;
  return {margin >= 0.02, "mean probe accuracy {0,180} - {0,90} = " + fmt(100.0 * margin, 3) +
                              " pp (need >= 2 pp; " + detail + ")"};
}

// ---------------------------------------------------------------------------

Outcome crop_criterion() {
  constexpr std::size_t kSize = 32, kCrop = 24, kTrials = 200;
  constexpr double kMaxShift = 8.0;
  Rng rng(5);
  std::vector<double> theta;
  std::vector<double> shifts;
  for (std::size_t i = 0; i < kTrials; ++i) {
    const double sx = kMaxShift * (2.0 * uniform01(rng) - 1.0);
    const double sy = kMaxShift * (2.0 * uniform01(rng) - 1.0);
    shifts.push_back(std::max(std::abs(sx), std::abs(sy)));
    // Physical translation is a fraction of the image: shift_px / (size - 1).
    const double tx = sx / static_cast<double>(kSize - 1), ty = sy / static_cast<double>(kSize - 1);
    const std::vector<double> row{0.0, 0.0, tf::normalize_unit(tf::ParamId::tx, tx),
                                  tf::normalize_unit(tf::ParamId::ty, ty), 0.0, 0.0};
    theta.insert(theta.end(), row.begin(), row.end());
  }
  ad::NoGradGuard no_grad;
  const auto ones = ad::Var::full({kTrials, 1, kSize, kSize}, 1.0);
  const auto out = tf::center_crop(tf::warp_affine(ones, ad::Var::constant({kTrials, 6}, theta)), kCrop, kCrop);
  const std::size_t per = kCrop * kCrop;
  std::size_t clean = 0;
  double worst = 1.0, largest_clean = 0.0, smallest_dirty = kMaxShift;
  for (std::size_t i = 0; i < kTrials; ++i) {
    double m = 1.0;
    for (std::size_t k = 0; k < per; ++k) m = std::min(m, out.values()[i * per + k]);
    worst = std::min(worst, m);
    if (m >= 1.0 - 1e-9) {
      ++clean;
      largest_clean = std::max(largest_clean, shifts[i]);
    } else {
      smallest_dirty = std::min(smallest_dirty, shifts[i]);
    }
  }
  const std::size_t hidden = (kSize - kCrop) / 2;
  return {clean == kTrials, std::to_string(clean) + "/200 crops free of padding, minimum value " + fmt(worst, 4) +
                                "; largest clean shift " + fmt(largest_clean, 3) + " px, smallest padded shift " +
                                fmt(smallest_dirty, 3) + " px; a centred 24-px crop of a 32-px image hides " +
                                std::to_string(hidden) + " px per side"};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(XFORM_CLI_PATH) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism_criterion(const fs::path& work) {
  const auto start = Clock::now();
  fs::remove_all(work / "determinism");
  const auto root = work / "determinism";
  fs::create_directories(root);
  io::atomic_write(root / "config.json", R"({
  "synthetic": {"samples": 400, "image_size": 16, "seed": 3,
                "distributions": {"rotation": {"type": "uniform", "lo": 0, "hi": 120, "unit": "deg"}}},
  "estimator": {"crop": 12},
  "eval": {"batch": 32}
})");
  const auto cfg = (root / "config.json").string();
  const auto log = root / "log.txt";
  const std::vector<std::string> commands{"synth", "estimate", "complement", "policy", "eval"};
  auto run_all = [&](const fs::path& d) -> std::string {
    const std::vector<std::string> args{
        "synth --config " + cfg + " --seed 3 --out " + (d / "synth").string(),
        "estimate --config " + cfg + " --preset smoke --seed 3 --data " + (d / "synth").string() + " --out " +
            (d / "estimate").string(),
        "complement --input " + (d / "estimate" / "histogram.csv").string() + " --out " + (d / "complement").string(),
        "policy --input " + (d / "complement" / "complement.csv").string() + " --task rotation --k 3 --seed 3 --out " +
            (d / "policy").string(),
        "eval --config " + cfg + " --policy " + (d / "policy" / "policy.json").string() +
            " --seeds 3 --pretext-epochs 1 --probe-epochs 1 --data " + (d / "synth").string() + " --out " +
            (d / "eval").string()};
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (const int code = run_cli(args[i], log); code != 0) return commands[i] + " exited " + std::to_string(code);
    }
    return "";
  };
  for (const char* run : {"a", "b"}) {
    if (auto err = run_all(root / run); !err.empty()) return {false, std::string("run ") + run + ": " + err};
  }
  std::size_t same = 0;
  std::string differing;
  for (const auto& c : commands) {
    const auto a = nlohmann::json::parse(io::read_file(root / "a" / c / "manifest.json"));
    const auto b = nlohmann::json::parse(io::read_file(root / "b" / c / "manifest.json"));
    if (a["outputs"] == b["outputs"] && !a["outputs"].empty()) {
      ++same;
    } else {
      differing += " " + c;
    }
  }
  const double secs = seconds_since(start);
  return {same == commands.size() && secs < 300.0,
          std::to_string(same) + "/5 commands with identical output digests across two runs" +
              (differing.empty() ? "" : " (differ:" + differing + ")") + ", " + fmt(secs, 3) + " s (limit 300 s)"};
}

// ---------------------------------------------------------------------------

Outcome color_identity_criterion() {
  Rng rng(7);
  constexpr std::size_t kB = 4, kH = 5, kW = 6;
  std::vector<double> px(kB * 3 * kH * kW);
  for (double& v : px) v = uniform01(rng);
  ad::NoGradGuard no_grad;
  const auto images = ad::Var::constant({kB, 3, kH, kW}, px);
  std::vector<double> identity;
  for (std::size_t i = 0; i < kB; ++i) {
    for (auto id : tf::params_of(tf::TransformKind::color)) identity.push_back(tf::identity_normalized(id));
  }
  const auto same = tf::apply_color_transform(images, ad::Var::constant({kB, 4}, identity));
  const bool exact = std::equal(same.values().begin(), same.values().end(), px.begin());

  double gray_err = 0.0;
  const auto gray = tf::adjust_saturation(images, ad::Var::full({kB}, 0.0));
  const std::size_t plane = kH * kW;
  for (std::size_t b = 0; b < kB; ++b) {
    for (std::size_t k = 0; k < plane; ++k) {
      const double* p = px.data() + b * 3 * plane + k;
      const double y = tf::kGrayWeights[0] * p[0] + tf::kGrayWeights[1] * p[plane] + tf::kGrayWeights[2] * p[2 * plane];
      for (std::size_t c = 0; c < 3; ++c) gray_err = std::max(gray_err, std::abs(gray.values()[b * 3 * plane + c * plane + k] - y));
    }
  }

  double hue_identity_err = 0.0;
  for (double theta : {0.0, 2.0 * kPi}) {
    const auto h = tf::apply_hue_rotation(images, ad::Var::full({kB}, theta));
    for (std::size_t i = 0; i < px.size(); ++i) hue_identity_err = std::max(hue_identity_err, std::abs(h.values()[i] - px[i]));
  }

  double luma_err = 0.0;
  std::vector<double> angles(kB);
  for (double& a : angles) a = 2.0 * kPi * (2.0 * uniform01(rng) - 1.0);
  const auto rotated = tf::apply_hue_rotation(images, ad::Var::constant({kB}, angles));
  for (std::size_t b = 0; b < kB; ++b) {
    for (std::size_t k = 0; k < plane; ++k) {
      double y0 = 0.0, y1 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        y0 += tf::kRgbToYiq[c] * px[b * 3 * plane + c * plane + k];
        y1 += tf::kRgbToYiq[c] * rotated.values()[b * 3 * plane + c * plane + k];
      }
      luma_err = std::max(luma_err, std::abs(y1 - y0));
    }
  }
  const bool pass = exact && gray_err < 1e-12 && hue_identity_err < 1e-9 && luma_err < 1e-9;
  return {pass, std::string("identity ") + (exact ? "bitwise exact" : "NOT exact") + ", grayscale error " +
                    fmt(gray_err, 3) + ", hue 0/2pi error " + fmt(hue_identity_err, 3) + ", luma drift " +
                    fmt(luma_err, 3) + " (limits 1e-9)"};
}

const char* kNames[] = {"",
                        "gradient suite",
                        "distribution-toolkit oracles",
                        "desk-scale distribution recovery",
                        "conflict direction",
                        "anti-artifact crop",
                        "determinism",
                        "colour identities"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  std::string work = (fs::temp_directory_path() / "xform_acceptance").string();
  app.add_option("--criterion", only, "Run one criterion (1-7)")->check(CLI::Range(1, 7));
  app.add_option("--work-dir", work, "Directory for intermediate outputs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{
      gradient_suite_criterion,
      distribution_oracle_criterion,
      [&] { return recovery_criterion(work); },
      conflict_direction_criterion,
      crop_criterion,
      [&] { return determinism_criterion(work); },
      color_identity_criterion,
  };
  bool all = true;
  for (int n = 1; n <= 7; ++n) {
    if (only && n != only) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << n << " (" << kNames[n] << "): " << (o.pass ? "PASS" : "FAIL") << ": " << o.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
