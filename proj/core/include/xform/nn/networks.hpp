#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xform/ad/tensor.hpp"
#include "xform/random.hpp"
#include "xform/transforms/params.hpp"

namespace xform::nn {

struct NamedParam {
  std::string name;
  ad::Var var;
};

/// Fully connected layer y = x W + b with W of shape [in, out].
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out);

  ad::Var forward(const ad::Var& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  ad::Var weight;
  ad::Var bias;

 private:
  std::size_t in_ = 0, out_ = 0;
};

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t padding);

  ad::Var forward(const ad::Var& x) const;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;

  ad::Var weight;  // [O, C, k, k]
  ad::Var bias;    // [O]

 private:
  std::size_t stride_ = 1, padding_ = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights, zeros for biases.
/// Parameters named "*.bias" are biases; each weight draws from its own
/// stream derived from (seed, position in the list).
void init_fan_in_uniform(const std::vector<NamedParam>& params, std::uint64_t seed);

/// Three fully connected layers latent -> hidden -> hidden -> out, leaky
/// rectifier (slope 0.2) between them and tanh on the output.
class MappingNetwork {
 public:
  static constexpr std::size_t kLatentDim = 10;
  static constexpr std::size_t kHidden = 128;
  static constexpr double kSlope = 0.2;

  explicit MappingNetwork(std::size_t out_dim, std::size_t latent_dim = kLatentDim, std::size_t hidden = kHidden);

  /// z [B, latent] -> normalized parameters [B, out] in (-1, 1).
  ad::Var forward(const ad::Var& z) const;
  std::vector<NamedParam> parameters() const;
  void init_weights(std::uint64_t seed);
  /// Sets the output layer to zero so every output is tanh(0) = 0.
  void zero_output_layer();

  std::size_t latent_dim() const { return latent_; }
  std::size_t output_dim() const { return out_; }
  std::size_t hidden_dim() const { return hidden_; }

 private:
  std::size_t latent_, hidden_, out_;
  Linear l1_, l2_, l3_;
};

enum class GeneratorLayout {
  split,  // affine: a scale network (1 output) and a network for the other 5
  joint,  // one network over all parameters of the kind
};

/// The mapping network(s) producing a full parameter vector of one kind.
class TransformGenerator {
 public:
  TransformGenerator(tf::TransformKind kind, GeneratorLayout layout);

  tf::TransformKind kind() const { return kind_; }
  GeneratorLayout layout() const { return layout_; }
  std::size_t output_dim() const;
  std::size_t latent_dim() const;  // total across sub-networks

  /// z [B, latent_dim()] -> [B, output_dim()]; sub-networks read consecutive
  /// latent slices and their outputs are concatenated in parameter order.
  ad::Var forward(const ad::Var& z) const;
  /// Draws standard-Gaussian latents and runs forward.
  ad::Var sample(std::size_t batch, Rng& rng) const;

  std::vector<NamedParam> parameters() const;
  void init_weights(std::uint64_t seed);
  void zero_output_layers();
  std::vector<MappingNetwork>& networks() { return nets_; }
  const std::vector<MappingNetwork>& networks() const { return nets_; }

  std::map<std::string, std::string> architecture() const;

 private:
  tf::TransformKind kind_;
  GeneratorLayout layout_;
  std::vector<MappingNetwork> nets_;
};

/// Wasserstein critic: flatten, then input -> 512 -> 256 -> 1 with leaky
/// rectifier (slope 0.2) after the first two layers and no output activation.
class Discriminator {
 public:
  static constexpr double kSlope = 0.2;

  explicit Discriminator(std::size_t input_dim, std::size_t hidden1 = 512, std::size_t hidden2 = 256);

  /// images [B, ...] with prod(...) = input_dim -> scores [B].
  ad::Var forward(const ad::Var& images) const;
  std::vector<NamedParam> parameters() const;
  void init_weights(std::uint64_t seed);
  std::size_t input_dim() const { return input_dim_; }
  std::map<std::string, std::string> architecture() const;

 private:
  std::size_t input_dim_, hidden1_, hidden2_;
  Linear l1_, l2_, l3_;
};

/// Two stride-2 3x3 convolutions with leaky rectifiers, global average
/// pooling, and a replaceable linear task head.
class PretextEncoder {
 public:
  static constexpr double kSlope = 0.2;

  PretextEncoder(std::size_t in_channels, std::size_t num_outputs, std::size_t width1 = 16, std::size_t width2 = 32);

  /// images [B, C, H, W] -> pooled features [B, width2].
  ad::Var features(const ad::Var& images) const;
  ad::Var logits(const ad::Var& images) const;

  /// Encoder parameters only (excludes the head).
  std::vector<NamedParam> encoder_parameters() const;
  std::vector<NamedParam> parameters() const;
  void init_weights(std::uint64_t seed);
  void replace_head(std::size_t num_outputs, std::uint64_t seed);

  std::size_t feature_dim() const { return width2_; }
  std::size_t in_channels() const { return in_channels_; }

 private:
  std::size_t in_channels_, width1_, width2_;
  Conv2d c1_, c2_;
  Linear head_;
};

}  // namespace xform::nn
