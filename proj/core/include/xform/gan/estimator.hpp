#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "xform/ad/optim.hpp"
#include "xform/data/dataset.hpp"
#include "xform/gan/config.hpp"
#include "xform/nn/networks.hpp"
#include "xform/random.hpp"

namespace xform::gan {

using Critic = std::function<ad::Var(const ad::Var&)>;

/// lambda * mean_i (||dD(x_i)/dx_i||_2 - 1)^2 at x_i = eps_i real_i +
/// (1 - eps_i) fake_i. The critic must score samples independently. The
/// result stays differentiable with respect to the critic's parameters.
ad::Var gradient_penalty(const Critic& critic, const ad::Var& real, const ad::Var& fake, double lambda,
                         std::span<const double> eps);
/// Draws eps_i ~ U(0, 1) from rng.
ad::Var gradient_penalty(const nn::Discriminator& disc, const ad::Var& real, const ad::Var& fake, double lambda,
                         Rng& rng);

/// Transforms reference images by generator samples, then center-crops:
/// center_crop(t(ref; gen(z))) with z ~ N(0, I).
ad::Var generate_fakes(const nn::TransformGenerator& gen, const ad::Var& ref_batch, std::size_t crop, Rng& rng);

struct CriticStats {
  double loss = 0.0;
  double wasserstein = 0.0;  // mean D(fake) - mean D(real)
  double penalty = 0.0;
};

/// Generator, critic and their optimizer states.
struct EstimatorState {
  EstimatorState(const EstimatorConfig& cfg, std::size_t channels);

  nn::TransformGenerator generator;
  nn::Discriminator discriminator;
  ad::Adam gen_opt;
  ad::Adam disc_opt;
  std::size_t critic_updates = 0;
  std::size_t generator_updates = 0;
};

/// One Adam step on the critic for
/// mean D(fake) - mean D(center_crop(real)) + gradient penalty.
CriticStats critic_step(EstimatorState& state, const ad::Var& real_batch, const ad::Var& ref_batch,
                        const EstimatorConfig& cfg, Rng& rng);

/// One Adam step on the generator for -mean D(fake) with the critic frozen.
double generator_step(EstimatorState& state, const ad::Var& ref_batch, const EstimatorConfig& cfg, Rng& rng);

struct HistoryEntry {
  std::size_t iteration = 0;
  double critic_loss = 0.0;  // mean over the iteration's critic steps
  double gen_loss = 0.0;
  double penalty = 0.0;
  std::size_t critic_updates = 0;  // cumulative
  std::size_t generator_updates = 0;
  double wall_seconds = 0.0;
};

struct TrainingHistory {
  std::vector<HistoryEntry> entries;
  /// iteration, critic_loss, gen_loss, penalty (wall-clock is omitted so the
  /// file is reproducible).
  std::string to_csv() const;
};

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const HistoryEntry&)> on_log;
};

struct TrainResult {
  nn::TransformGenerator generator;
  nn::Discriminator discriminator;
  TrainingHistory history;
};

/// Alternates n_critic critic steps with one generator step for
/// cfg.iterations iterations. Throws TrainingAborted on a non-finite loss;
/// checkpoints already written are kept.
TrainResult train_estimator(const EstimatorConfig& cfg, const data::LabeledImageSet& dataset,
                            const data::LabeledImageSet& reference, const TrainOptions& options = {});

/// Writes generator.ckpt, discriminator.ckpt and generator.manifest.
void write_estimator_checkpoint(const std::filesystem::path& dir, const nn::TransformGenerator& gen,
                                const nn::Discriminator& disc, std::size_t iteration);
nn::TransformGenerator load_generator(const std::filesystem::path& dir);

}  // namespace xform::gan
