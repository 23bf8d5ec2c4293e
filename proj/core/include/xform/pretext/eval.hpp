#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xform/data/dataset.hpp"
#include "xform/dist/policy.hpp"
#include "xform/nn/networks.hpp"
#include "xform/pretext/task.hpp"

namespace xform::pretext {

/// Training schedule shared by every compared policy.
struct EvalConfig {
  std::size_t pretext_epochs = 20;
  std::size_t probe_epochs = 20;
  std::size_t batch = 128;
  double lr = 0.05;  // halved after 50% and again after 75% of the epochs
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double test_fraction = 0.2;
  std::size_t width1 = 16;
  std::size_t width2 = 32;

  void validate() const;
  std::string to_json() const;
  /// Keys override `base`; unknown keys are rejected.
  static EvalConfig from_json(std::string_view text, const EvalConfig& base);
};

/// Learning rate for an epoch under the halving schedule.
double scheduled_lr(const EvalConfig& cfg, std::size_t epoch, std::size_t epochs);

/// Per-channel intensity statistics used to standardize encoder inputs.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Mean and standard deviation of each channel over the selected images.
ChannelStats channel_stats(const data::LabeledImageSet& data, std::span<const std::size_t> indices);
/// (x - mean_c) / stddev_c for images [B, C, H, W].
ad::Var standardize(const ad::Var& images, const ChannelStats& stats);
data::LabeledImageSet standardize(const data::LabeledImageSet& data, const ChannelStats& stats);

struct PretextResult {
  double task_accuracy = 0.0;
  double final_loss = 0.0;
};

/// SGD with momentum on cross-entropy over pretext labels; task accuracy is
/// measured on the task set after training. Throws TrainingAborted on a
/// non-finite loss.
PretextResult train_pretext(nn::PretextEncoder& encoder, const PretextBatch& task, std::size_t epochs,
                            std::uint64_t seed, const EvalConfig& cfg);

/// Accuracy of a linear classifier trained on fixed features [N, D]
/// (standardized with training statistics).
double linear_probe_features(std::span<const double> train_features, std::span<const int> train_labels,
                             std::span<const double> test_features, std::span<const int> test_labels,
                             std::size_t dim, std::size_t classes, std::size_t epochs, std::uint64_t seed,
                             const EvalConfig& cfg);

/// Pooled features of images [N, C, H, W] cropped to `crop`, computed in
/// batches without gradient tracking.
std::vector<double> encode_features(const nn::PretextEncoder& encoder, const data::LabeledImageSet& data,
                                    std::span<const std::size_t> indices, std::size_t crop, std::size_t batch);

/// Trains a linear probe on the frozen encoder and returns test accuracy.
/// Throws Error if any encoder parameter changes while the probe trains.
double linear_probe(const nn::PretextEncoder& encoder, const data::LabeledImageSet& data,
                    std::span<const std::size_t> train, std::span<const std::size_t> test, std::size_t crop,
                    std::size_t epochs, std::uint64_t seed, const EvalConfig& cfg);

struct ProbeResult {
  std::string policy_id;
  std::string task;
  std::string instances;
  std::uint64_t seed = 0;
  double pretext_acc = 0.0;
  double probe_acc = 0.0;
};

/// build_pretext_task -> train_pretext -> linear_probe for one seed. Encoder
/// inputs are standardized with channel statistics of the training split;
/// transformations act on the raw images.
ProbeResult evaluate_policy(const dist::PolicySpec& policy, const data::LabeledImageSet& data, std::uint64_t seed,
                            const EvalConfig& cfg);

/// Results CSV: policy_id,kind,instances,seed,pretext_acc,probe_acc.
std::string results_csv_header();
std::string results_csv_row(const ProbeResult& r);

}  // namespace xform::pretext
