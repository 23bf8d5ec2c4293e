#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "xform/ad/engine.hpp"
#include "xform/ad/ops.hpp"
#include "xform/error.hpp"
#include "xform/nn/checkpoint.hpp"
#include "xform/nn/networks.hpp"

namespace xform {
namespace {

using ad::Var;

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

std::vector<std::vector<double>> weights_of(const std::vector<nn::NamedParam>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.push_back(vec(p.var.values()));
  return out;
}

Var latent(std::size_t batch, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return Var::constant({batch, dim}, gaussian_vector(rng, batch * dim));
}

TEST(Init, SameSeedSameWeights) {
  nn::MappingNetwork a(5), b(5);
  a.init_weights(3);
  b.init_weights(3);
  EXPECT_EQ(weights_of(a.parameters()), weights_of(b.parameters()));
  b.init_weights(4);
  EXPECT_NE(weights_of(a.parameters()), weights_of(b.parameters()));
}

TEST(Init, BiasesAreZero) {
  nn::Discriminator d(16);
  d.init_weights(1);
  for (const auto& p : d.parameters()) {
    if (p.name.ends_with(".bias")) {
      for (double v : p.var.values()) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Init, WeightSpreadMatchesFanInBound) {
  for (const auto& c : testing::load_fixture("estimator.json")["init_moments"]["cases"]) {
    const std::size_t fan_in = c["fan_in"];
    const std::size_t out = 10000 / fan_in + 1;
    nn::Linear layer(fan_in, out);
    std::vector<nn::NamedParam> params;
    layer.collect("fc", params);
    nn::init_fan_in_uniform(params, 9);
    const auto w = layer.weight.values();
    double mean = 0, sq = 0;
    for (double v : w) mean += v;
    mean /= static_cast<double>(w.size());
    for (double v : w) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / static_cast<double>(w.size()));
    const double expected = c["expected_std"];
    EXPECT_NEAR(sd, expected, 0.2 * expected) << "fan_in " << fan_in;
    for (double v : w) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(static_cast<double>(fan_in)));
  }
}

TEST(Generator, ZeroOutputLayerGivesZeros) {
  nn::TransformGenerator g(tf::TransformKind::affine, nn::GeneratorLayout::split);
  g.init_weights(2);
  g.zero_output_layers();
  const auto out = g.forward(latent(7, g.latent_dim(), 1));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Generator, DeterministicAndInsideOpenInterval) {
  nn::TransformGenerator g(tf::TransformKind::color, nn::GeneratorLayout::joint);
  g.init_weights(5);
  const auto z = latent(64, g.latent_dim(), 6);
  const auto a = g.forward(z), b = g.forward(z);
  EXPECT_EQ(vec(a.values()), vec(b.values()));
  for (double v : a.values()) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LT(std::abs(v), 1.0);
  }
}

TEST(Generator, OutputDimensionsPerRole) {
  nn::TransformGenerator split(tf::TransformKind::affine, nn::GeneratorLayout::split);
  ASSERT_EQ(split.networks().size(), 2u);
  EXPECT_EQ(split.networks()[0].output_dim(), 1u);
  EXPECT_EQ(split.networks()[1].output_dim(), 5u);
  EXPECT_EQ(split.networks()[0].latent_dim(), 10u);
  EXPECT_EQ(split.networks()[0].hidden_dim(), 128u);
  EXPECT_EQ(split.output_dim(), 6u);
  nn::TransformGenerator joint(tf::TransformKind::affine, nn::GeneratorLayout::joint);
  EXPECT_EQ(joint.networks().size(), 1u);
  nn::TransformGenerator color(tf::TransformKind::color, nn::GeneratorLayout::split);
  EXPECT_EQ(color.output_dim(), 4u);
}

TEST(Generator, WrongLatentDimensionFails) {
  nn::MappingNetwork net(3);
  EXPECT_THROW(net.forward(Var::zeros({2, 9})), ShapeError);
}

TEST(Generator, FirstLayerGradientMatchesFiniteDifferences) {
  nn::MappingNetwork net(5);
  net.init_weights(8);
  const auto z = latent(4, 10, 9);
  const auto first = net.parameters().front().var;
  const auto r = testing::check_gradients([&] { return ad::mean(net.forward(z)); }, {first});
  EXPECT_LT(r.max_rel_error, 1e-4);
}

// Batched matmul may sum in a different order than a single row.
TEST(Generator, BatchEqualsPerSample) {
  nn::TransformGenerator g(tf::TransformKind::affine, nn::GeneratorLayout::split);
  g.init_weights(10);
  const auto z = latent(5, g.latent_dim(), 11);
  const auto batch = g.forward(z);
  for (std::size_t b = 0; b < 5; ++b) {
    const auto one = g.forward(ad::narrow(z, 0, b, 1));
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(one.values()[k], batch.values()[b * 6 + k], 1e-13);
  }
}

TEST(Discriminator, ZeroWeightsScoreZero) {
  nn::Discriminator d(12);
  const auto s = d.forward(testing::random_leaf({3, 1, 3, 4}, 1));
  ASSERT_EQ(s.shape(), (ad::Shape{3}));
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
}

TEST(Discriminator, DoublingLinearCriticDoublesScore) {
  // With non-negative inputs and weights every pre-activation stays positive,
  // so the critic is linear in its weights of the last layer.
  nn::Discriminator d(4, 3, 2);
  for (const auto& p : d.parameters()) {
    Var v = p.var;
    for (double& x : v.mutable_values()) x = p.name.ends_with(".bias") ? 0.0 : 0.5;
  }
  const auto x = testing::random_leaf({2, 4}, 2, 0.1, 1.0).detach();
  const auto s1 = vec(d.forward(x).values());
  for (const auto& p : d.parameters()) {
    if (p.name.starts_with("fc3.weight")) {
      Var v = p.var;
      for (double& w : v.mutable_values()) w *= 2.0;
    }
  }
  const auto s2 = vec(d.forward(x).values());
  for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(s2[i], 2.0 * s1[i]);
}

TEST(Discriminator, BatchEqualsPerSample) {
  nn::Discriminator d(2 * 3 * 3);
  d.init_weights(3);
  const auto x = testing::random_leaf({4, 2, 3, 3}, 4).detach();
  const auto batch = d.forward(x);
  for (std::size_t b = 0; b < 4; ++b) {
    EXPECT_NEAR(d.forward(ad::narrow(x, 0, b, 1)).values()[0], batch.values()[b], 1e-13);
  }
}

TEST(Discriminator, ShapeMismatchFails) {
  nn::Discriminator d(16);
  EXPECT_THROW(d.forward(Var::zeros({2, 1, 3, 3})), ShapeError);
}

TEST(Discriminator, InputGradientIsAvailable) {
  nn::Discriminator d(8, 6, 4);
  d.init_weights(5);
  const auto x = testing::random_leaf({3, 8}, 6);
  EXPECT_NO_THROW(ad::input_gradient_node(ad::sum(d.forward(x)), x));
}

TEST(Encoder, FeaturesAndHead) {
  nn::PretextEncoder enc(3, 4);
  enc.init_weights(1);
  const auto x = testing::random_leaf({2, 3, 12, 12}, 2, 0.0, 1.0).detach();
  EXPECT_EQ(enc.features(x).shape(), (ad::Shape{2, 32}));
  EXPECT_EQ(enc.logits(x).shape(), (ad::Shape{2, 4}));
  const auto before = weights_of(enc.encoder_parameters());
  enc.replace_head(7, 3);
  EXPECT_EQ(enc.logits(x).shape(), (ad::Shape{2, 7}));
  EXPECT_EQ(weights_of(enc.encoder_parameters()), before);
}

TEST(Encoder, BatchEqualsPerSample) {
  nn::PretextEncoder enc(1, 2, 4, 6);
  enc.init_weights(4);
  const auto x = testing::random_leaf({3, 1, 8, 8}, 5).detach();
  const auto batch = enc.features(x);
  for (std::size_t b = 0; b < 3; ++b) {
    const auto one = enc.features(ad::narrow(x, 0, b, 1));
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(one.values()[k], batch.values()[b * 6 + k], 1e-15);
  }
}

TEST(Checkpoint, RoundTrip) {
  nn::TransformGenerator g(tf::TransformKind::affine, nn::GeneratorLayout::split);
  g.init_weights(12);
  const auto bytes = nn::encode_checkpoint(nn::snapshot(g.parameters()));
  EXPECT_EQ(bytes.substr(0, 8), "XFCKPT01");
  nn::TransformGenerator h(tf::TransformKind::affine, nn::GeneratorLayout::split);
  nn::restore(nn::decode_checkpoint(bytes), h.parameters());
  EXPECT_EQ(weights_of(g.parameters()), weights_of(h.parameters()));
}

TEST(Checkpoint, CorruptInputFails) {
  nn::MappingNetwork net(2);
  auto bytes = nn::encode_checkpoint(nn::snapshot(net.parameters()));
  EXPECT_THROW(nn::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), InvalidInput);
  bytes[0] = 'Y';
  EXPECT_THROW(nn::decode_checkpoint(bytes), InvalidInput);
  nn::MappingNetwork other(3);
  EXPECT_THROW(nn::restore(nn::snapshot(net.parameters()), other.parameters()), InvalidInput);
}

TEST(Checkpoint, ManifestRoundTrip) {
  const auto dir = testing::scratch_dir("manifest");
  nn::Discriminator d(576);
  nn::write_manifest(dir / "d.manifest", d.architecture());
  EXPECT_EQ(nn::read_manifest(dir / "d.manifest"), d.architecture());
}

}  // namespace
}  // namespace xform
