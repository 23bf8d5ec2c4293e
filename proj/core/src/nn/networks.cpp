#include "xform/nn/networks.hpp"

#include <cmath>
#include <string>

#include "xform/ad/ops.hpp"
#include "xform/error.hpp"

namespace xform::nn {

using ad::Var;

Linear::Linear(std::size_t in, std::size_t out)
    : weight(Var::zeros({in, out}, true)), bias(Var::zeros({out}, true)), in_(in), out_(out) {}

Var Linear::forward(const Var& x) const { return ad::bias_add(ad::matmul(x, weight), bias); }

void Linear::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
               std::size_t padding)
    : weight(Var::zeros({out_channels, in_channels, kernel, kernel}, true)),
      bias(Var::zeros({out_channels}, true)),
      stride_(stride),
      padding_(padding) {}

Var Conv2d::forward(const Var& x) const { return ad::conv2d(x, weight, bias, stride_, padding_); }

void Conv2d::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

void init_fan_in_uniform(const std::vector<NamedParam>& params, std::uint64_t seed) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var v = params[i].var;
    auto values = v.mutable_values();
    const std::string& name = params[i].name;
    const bool is_bias = name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
    if (is_bias) {
      std::fill(values.begin(), values.end(), 0.0);
      continue;
    }
    // Linear weights are [in, out]; conv weights are [O, C, k, k].
    const std::size_t fan_in = v.rank() == 2 ? v.dim(0) : v.numel() / v.dim(0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Rng rng(derive_seed(seed, i));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : values) w = dist(rng);
  }
}

// MappingNetwork ------------------------------------------------------------

MappingNetwork::MappingNetwork(std::size_t out_dim, std::size_t latent_dim, std::size_t hidden)
    : latent_(latent_dim),
      hidden_(hidden),
      out_(out_dim),
      l1_(latent_dim, hidden),
      l2_(hidden, hidden),
      l3_(hidden, out_dim) {
  if (out_dim == 0 || latent_dim == 0 || hidden == 0) throw InvalidInput("MappingNetwork: zero-sized layer");
}

Var MappingNetwork::forward(const Var& z) const {
  if (z.rank() != 2 || z.dim(1) != latent_) {
    throw ShapeError("MappingNetwork: expected latent [B, " + std::to_string(latent_) + "], got " +
                     ad::to_string(z.shape()));
  }
  Var h = ad::leaky_relu(l1_.forward(z), kSlope);
  h = ad::leaky_relu(l2_.forward(h), kSlope);
  return ad::tanh(l3_.forward(h));
}

std::vector<NamedParam> MappingNetwork::parameters() const {
  std::vector<NamedParam> out;
  l1_.collect("fc1", out);
  l2_.collect("fc2", out);
  l3_.collect("fc3", out);
  return out;
}

void MappingNetwork::init_weights(std::uint64_t seed) { init_fan_in_uniform(parameters(), seed); }

void MappingNetwork::zero_output_layer() {
  Var w = l3_.weight, b = l3_.bias;
  std::fill(w.mutable_values().begin(), w.mutable_values().end(), 0.0);
  std::fill(b.mutable_values().begin(), b.mutable_values().end(), 0.0);
}

// TransformGenerator --------------------------------------------------------

TransformGenerator::TransformGenerator(tf::TransformKind kind, GeneratorLayout layout) : kind_(kind), layout_(layout) {
  const std::size_t dims = tf::params_of(kind).size();
  if (kind == tf::TransformKind::affine && layout == GeneratorLayout::split) {
    nets_.emplace_back(1);
    nets_.emplace_back(dims - 1);
  } else {
    nets_.emplace_back(dims);
  }
}

std::size_t TransformGenerator::output_dim() const { return tf::params_of(kind_).size(); }

std::size_t TransformGenerator::latent_dim() const {
  std::size_t total = 0;
  for (const auto& n : nets_) total += n.latent_dim();
  return total;
}

Var TransformGenerator::forward(const Var& z) const {
  if (z.rank() != 2 || z.dim(1) != latent_dim()) {
    throw ShapeError("TransformGenerator: expected latent [B, " + std::to_string(latent_dim()) + "], got " +
                     ad::to_string(z.shape()));
  }
  if (nets_.size() == 1) return nets_[0].forward(z);
  std::vector<Var> outs;
  std::size_t offset = 0;
  for (const auto& net : nets_) {
    outs.push_back(net.forward(ad::narrow(z, 1, offset, net.latent_dim())));
    offset += net.latent_dim();
  }
  return ad::concat(outs, 1);
}

Var TransformGenerator::sample(std::size_t batch, Rng& rng) const {
  return forward(Var::constant({batch, latent_dim()}, gaussian_vector(rng, batch * latent_dim())));
}

std::vector<NamedParam> TransformGenerator::parameters() const {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < nets_.size(); ++i) {
    for (auto& p : nets_[i].parameters()) out.push_back({"net" + std::to_string(i) + "." + p.name, p.var});
  }
  return out;
}

void TransformGenerator::init_weights(std::uint64_t seed) {
  for (std::size_t i = 0; i < nets_.size(); ++i) nets_[i].init_weights(derive_seed(seed, i));
}

void TransformGenerator::zero_output_layers() {
  for (auto& n : nets_) n.zero_output_layer();
}

std::map<std::string, std::string> TransformGenerator::architecture() const {
  std::map<std::string, std::string> a;
  a["network"] = "transform_generator";
  a["kind"] = std::string(tf::kind_name(kind_));
  a["layout"] = layout_ == GeneratorLayout::split ? "split" : "joint";
  a["subnetworks"] = std::to_string(nets_.size());
  std::string outs;
  for (const auto& n : nets_) outs += (outs.empty() ? "" : ",") + std::to_string(n.output_dim());
  a["outputs"] = outs;
  a["latent_dim"] = std::to_string(nets_.front().latent_dim());
  a["hidden_dim"] = std::to_string(nets_.front().hidden_dim());
  a["activation"] = "leaky_relu(0.2)";
  a["output_activation"] = "tanh";
  return a;
}

// Discriminator -------------------------------------------------------------

Discriminator::Discriminator(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2)
    : input_dim_(input_dim),
      hidden1_(hidden1),
      hidden2_(hidden2),
      l1_(input_dim, hidden1),
      l2_(hidden1, hidden2),
      l3_(hidden2, 1) {
  if (input_dim == 0) throw InvalidInput("Discriminator: zero input dimension");
}

Var Discriminator::forward(const Var& images) const {
  if (images.rank() < 1 || images.dim(0) == 0 || images.numel() / images.dim(0) != input_dim_) {
    throw ShapeError("Discriminator: input " + ad::to_string(images.shape()) + " does not flatten to " +
                     std::to_string(input_dim_) + " features per sample");
  }
  const std::size_t batch = images.dim(0);
  Var h = ad::leaky_relu(l1_.forward(ad::flatten(images)), kSlope);
  h = ad::leaky_relu(l2_.forward(h), kSlope);
  return ad::reshape(l3_.forward(h), {batch});
}

std::vector<NamedParam> Discriminator::parameters() const {
  std::vector<NamedParam> out;
  l1_.collect("fc1", out);
  l2_.collect("fc2", out);
  l3_.collect("fc3", out);
  return out;
}

void Discriminator::init_weights(std::uint64_t seed) { init_fan_in_uniform(parameters(), seed); }

std::map<std::string, std::string> Discriminator::architecture() const {
  return {{"network", "discriminator"},
          {"input_dim", std::to_string(input_dim_)},
          {"hidden1", std::to_string(hidden1_)},
          {"hidden2", std::to_string(hidden2_)},
          {"activation", "leaky_relu(0.2)"},
          {"output_activation", "none"}};
}

// PretextEncoder ------------------------------------------------------------

PretextEncoder::PretextEncoder(std::size_t in_channels, std::size_t num_outputs, std::size_t width1,
                               std::size_t width2)
    : in_channels_(in_channels),
      width1_(width1),
      width2_(width2),
      c1_(in_channels, width1, 3, 2, 1),
      c2_(width1, width2, 3, 2, 1),
      head_(width2, num_outputs) {}

Var PretextEncoder::features(const Var& images) const {
  if (images.rank() != 4 || images.dim(1) != in_channels_) {
    throw ShapeError("PretextEncoder: expected [B, " + std::to_string(in_channels_) + ", H, W], got " +
                     ad::to_string(images.shape()));
  }
  Var h = ad::leaky_relu(c1_.forward(images), kSlope);
  h = ad::leaky_relu(c2_.forward(h), kSlope);
  const std::size_t batch = h.dim(0), channels = h.dim(1), spatial = h.dim(2) * h.dim(3);
  return ad::scale(ad::sum_axis(ad::reshape(h, {batch, channels, spatial}), 2), 1.0 / static_cast<double>(spatial));
}

Var PretextEncoder::logits(const Var& images) const { return head_.forward(features(images)); }

std::vector<NamedParam> PretextEncoder::encoder_parameters() const {
  std::vector<NamedParam> out;
  c1_.collect("conv1", out);
  c2_.collect("conv2", out);
  return out;
}

std::vector<NamedParam> PretextEncoder::parameters() const {
  auto out = encoder_parameters();
  head_.collect("head", out);
  return out;
}

void PretextEncoder::init_weights(std::uint64_t seed) { init_fan_in_uniform(parameters(), seed); }

void PretextEncoder::replace_head(std::size_t num_outputs, std::uint64_t seed) {
  head_ = Linear(width2_, num_outputs);
  std::vector<NamedParam> p;
  head_.collect("head", p);
  init_fan_in_uniform(p, seed);
}

}  // namespace xform::nn
