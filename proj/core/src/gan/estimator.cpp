#include "xform/gan/estimator.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "xform/ad/engine.hpp"
#include "xform/ad/ops.hpp"
#include "xform/error.hpp"
#include "xform/io.hpp"
#include "xform/nn/checkpoint.hpp"
#include "xform/transforms/color.hpp"
#include "xform/transforms/geometric.hpp"

namespace xform::gan {

namespace {

std::vector<ad::Var> vars_of(const std::vector<nn::NamedParam>& params) {
  std::vector<ad::Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

ad::AdamHyper hyper_of(const EstimatorConfig& cfg) {
  ad::AdamHyper h;
  h.lr = cfg.lr;
  h.beta1 = cfg.beta1;
  h.beta2 = cfg.beta2;
  return h;
}

class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<nn::NamedParam> params) : params_(std::move(params)) {
    for (auto& p : params_) p.var.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.var.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<nn::NamedParam> params_;
};

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw TrainingAborted(std::string(what) + ": non-finite loss");
}

std::vector<std::size_t> draw_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = pick(rng);
  return out;
}

}  // namespace

ad::Var gradient_penalty(const Critic& critic, const ad::Var& real, const ad::Var& fake, double lambda,
                         std::span<const double> eps) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("gradient_penalty: real " + ad::to_string(real.shape()) + " and fake " +
                     ad::to_string(fake.shape()) + " differ");
  }
  const std::size_t b = real.dim(0);
  if (eps.size() != b) throw ShapeError("gradient_penalty: need one interpolation weight per sample");
  const std::size_t per = real.numel() / b;
  std::vector<double> mixed(real.numel());
  const auto r = real.values();
  const auto f = fake.values();
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t idx = i * per + k;
      mixed[idx] = eps[i] * r[idx] + (1.0 - eps[i]) * f[idx];
    }
  }
  const auto x_hat = ad::Var::parameter(real.shape(), std::move(mixed));
  ad::GradModeGuard grad_on(true);
  const auto scores = critic(x_hat);
  // Samples are scored independently, so the gradient of the summed scores
  // holds each sample's own input gradient.
  const auto g = ad::input_gradient_node(ad::sum(scores), x_hat);
  const auto sq = ad::sum_axis(ad::square(ad::reshape(g, {b, per})), 1);
  const auto norm = ad::sqrt(ad::add_scalar(sq, 1e-12));
  return ad::scale(ad::mean(ad::square(ad::add_scalar(norm, -1.0))), lambda);
}

ad::Var gradient_penalty(const nn::Discriminator& disc, const ad::Var& real, const ad::Var& fake, double lambda,
                         Rng& rng) {
  std::vector<double> eps(real.dim(0));
  for (double& e : eps) e = uniform01(rng);
  return gradient_penalty([&](const ad::Var& x) { return disc.forward(x); }, real, fake, lambda, eps);
}

ad::Var generate_fakes(const nn::TransformGenerator& gen, const ad::Var& ref_batch, std::size_t crop, Rng& rng) {
  const auto theta = gen.sample(ref_batch.dim(0), rng);
  const auto transformed = gen.kind() == tf::TransformKind::affine ? tf::warp_affine(ref_batch, theta)
                                                                   : tf::apply_color_transform(ref_batch, theta);
  return tf::center_crop(transformed, crop, crop);
}

EstimatorState::EstimatorState(const EstimatorConfig& cfg, std::size_t channels)
    : generator(cfg.kind, cfg.layout),
      discriminator(channels * cfg.crop * cfg.crop),
      gen_opt({}, hyper_of(cfg)),
      disc_opt({}, hyper_of(cfg)) {
  cfg.validate();
  generator.init_weights(derive_seed(cfg.seed, 1));
  discriminator.init_weights(derive_seed(cfg.seed, 2));
  gen_opt = ad::Adam(vars_of(generator.parameters()), hyper_of(cfg));
  disc_opt = ad::Adam(vars_of(discriminator.parameters()), hyper_of(cfg));
}

CriticStats critic_step(EstimatorState& state, const ad::Var& real_batch, const ad::Var& ref_batch,
                        const EstimatorConfig& cfg, Rng& rng) {
  ad::Var fake;
  {
    ad::NoGradGuard no_grad;
    fake = generate_fakes(state.generator, ref_batch, cfg.crop, rng);
  }
  const auto real = tf::center_crop(real_batch, cfg.crop, cfg.crop);
  if (real.shape() != fake.shape()) {
    throw ShapeError("critic_step: real " + ad::to_string(real.shape()) + " and fake " +
                     ad::to_string(fake.shape()) + " differ");
  }
  const auto& disc = state.discriminator;
  // One pass over [fake; real] reads the critic weights once.
  const std::size_t b = fake.dim(0);
  const std::vector<ad::Var> both{fake, real};
  const auto scores = disc.forward(ad::concat(both, 0));
  const auto w = ad::sub(ad::mean(ad::narrow(scores, 0, 0, b)), ad::mean(ad::narrow(scores, 0, b, b)));
  const auto gp = gradient_penalty(disc, real, fake, cfg.lambda, rng);
  const auto loss = ad::add(w, gp);
  CriticStats stats{loss.item(), w.item(), gp.item()};
  require_finite(stats.loss, "critic_step");
  ad::backward(loss);
  state.disc_opt.step();
  ++state.critic_updates;
  return stats;
}

double generator_step(EstimatorState& state, const ad::Var& ref_batch, const EstimatorConfig& cfg, Rng& rng) {
  FreezeGuard freeze(state.discriminator.parameters());
  const auto fake = generate_fakes(state.generator, ref_batch, cfg.crop, rng);
  const auto loss = ad::scale(ad::mean(state.discriminator.forward(fake)), -1.0);
  const double value = loss.item();
  require_finite(value, "generator_step");
  ad::backward(loss);
  state.gen_opt.step();
  ++state.generator_updates;
  return value;
}

std::string TrainingHistory::to_csv() const {
  std::ostringstream out;
  out << "iteration,critic_loss,gen_loss,penalty\n";
  for (const auto& e : entries) {
    out << e.iteration << ',' << io::format_double(e.critic_loss) << ',' << io::format_double(e.gen_loss) << ','
        << io::format_double(e.penalty) << '\n';
  }
  return out.str();
}

TrainResult train_estimator(const EstimatorConfig& cfg, const data::LabeledImageSet& dataset,
                            const data::LabeledImageSet& reference, const TrainOptions& options) {
  cfg.validate();
  if (dataset.size() == 0) throw InvalidInput("train_estimator: dataset is empty");
  if (reference.size() == 0) throw InvalidInput("train_estimator: reference subset is empty");
  if (dataset.channels != reference.channels || dataset.height != reference.height ||
      dataset.width != reference.width) {
    throw InvalidInput("train_estimator: reference images differ in shape from the dataset");
  }
  if (cfg.crop > dataset.height || cfg.crop > dataset.width) {
    throw InvalidInput("train_estimator: crop " + std::to_string(cfg.crop) + " exceeds the image size");
  }
  if (cfg.kind == tf::TransformKind::color && dataset.channels != 3) {
    throw InvalidInput("train_estimator: colour estimation needs 3-channel images");
  }

  EstimatorState state(cfg, dataset.channels);
  Rng rng(derive_seed(cfg.seed, 3));
  TrainingHistory history;
  const auto start = std::chrono::steady_clock::now();
  double critic_sum = 0.0, penalty_sum = 0.0;

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    critic_sum = penalty_sum = 0.0;
    try {
      for (std::size_t c = 0; c < cfg.n_critic; ++c) {
        const auto real_idx = draw_indices(dataset.size(), cfg.batch, rng);
        const auto ref_idx = draw_indices(reference.size(), cfg.batch, rng);
        const auto stats = critic_step(state, dataset.batch(real_idx), reference.batch(ref_idx), cfg, rng);
        critic_sum += stats.loss;
        penalty_sum += stats.penalty;
      }
      const auto ref_idx = draw_indices(reference.size(), cfg.batch, rng);
      const double gen_loss = generator_step(state, reference.batch(ref_idx), cfg, rng);
      if (it % cfg.log_every == 0 || it == cfg.iterations) {
        HistoryEntry e;
        e.iteration = it;
        e.critic_loss = critic_sum / static_cast<double>(cfg.n_critic);
        e.gen_loss = gen_loss;
        e.penalty = penalty_sum / static_cast<double>(cfg.n_critic);
        e.critic_updates = state.critic_updates;
        e.generator_updates = state.generator_updates;
        e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        history.entries.push_back(e);
        if (options.on_log) options.on_log(e);
      }
    } catch (const TrainingAborted& e) {
      throw TrainingAborted(std::string(e.what()) + " at iteration " + std::to_string(it));
    }
    if (options.checkpoint_dir && cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
      write_estimator_checkpoint(*options.checkpoint_dir, state.generator, state.discriminator, it);
    }
  }
  return TrainResult{std::move(state.generator), std::move(state.discriminator), std::move(history)};
}

void write_estimator_checkpoint(const std::filesystem::path& dir, const nn::TransformGenerator& gen,
                                const nn::Discriminator& disc, std::size_t iteration) {
  std::filesystem::create_directories(dir);
  nn::write_checkpoint(dir / "generator.ckpt", nn::snapshot(gen.parameters()));
  nn::write_checkpoint(dir / "discriminator.ckpt", nn::snapshot(disc.parameters()));
  auto manifest = gen.architecture();
  manifest["iteration"] = std::to_string(iteration);
  nn::write_manifest(dir / "generator.manifest", manifest);
  auto dmanifest = disc.architecture();
  dmanifest["iteration"] = std::to_string(iteration);
  nn::write_manifest(dir / "discriminator.manifest", dmanifest);
}

nn::TransformGenerator load_generator(const std::filesystem::path& dir) {
  const auto manifest = nn::read_manifest(dir / "generator.manifest");
  auto get = [&](const std::string& key) {
    auto it = manifest.find(key);
    if (it == manifest.end()) throw InvalidInput("generator manifest: missing key '" + key + "'");
    return it->second;
  };
  const auto layout_name = get("layout");
  if (layout_name != "split" && layout_name != "joint") {
    throw InvalidInput("generator manifest: layout '" + layout_name + "'");
  }
  nn::TransformGenerator gen(tf::parse_kind(get("kind")),
                             layout_name == "split" ? nn::GeneratorLayout::split : nn::GeneratorLayout::joint);
  nn::restore(nn::read_checkpoint(dir / "generator.ckpt"), gen.parameters());
  return gen;
}

}  // namespace xform::gan
