#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "xform/data/idx.hpp"
#include "xform/data/synthetic.hpp"
#include "xform/dist/histogram.hpp"
#include "xform/error.hpp"
#include "xform/io.hpp"

namespace xform {
namespace {

using tf::ParamId;

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return "no error";
}

TEST(Idx, FixtureDecodes) {
  const auto fx = testing::load_fixture("idx.json");
  const auto set = data::load_idx(testing::fixture_path(fx["images"]), testing::fixture_path(fx["labels"]));
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.height, 4u);
  EXPECT_EQ(set.width, 4u);
  EXPECT_EQ(set.channels, 1u);
  EXPECT_EQ(set.labels, fx["expected_labels"].get<std::vector<int>>());
  const auto pixels = testing::flatten_doubles(fx["expected_pixels"]);
  ASSERT_EQ(set.pixels.size(), pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) EXPECT_NEAR(set.pixels[i], pixels[i], 1e-15) << i;
}

TEST(Idx, EmptySetDecodes) {
  const auto fx = testing::load_fixture("idx.json");
  const auto set =
      data::load_idx(testing::fixture_path(fx["empty_images"]), testing::fixture_path(fx["empty_labels"]));
  EXPECT_EQ(set.size(), 0u);
  EXPECT_TRUE(set.pixels.empty());
}

TEST(Idx, WrongMagicNamesBothNumbers) {
  const auto fx = testing::load_fixture("idx.json");
  auto images = io::read_file(testing::fixture_path(fx["images"]));
  const auto labels = io::read_file(testing::fixture_path(fx["labels"]));
  images[3] = 0x01;
  const auto msg = error_of([&] { data::parse_idx(images, labels); });
  EXPECT_NE(msg.find("0x00000801"), std::string::npos) << msg;
  EXPECT_NE(msg.find("0x00000803"), std::string::npos) << msg;
}

TEST(Idx, CountMismatchAndTruncation) {
  const auto fx = testing::load_fixture("idx.json");
  const auto images = io::read_file(testing::fixture_path(fx["images"]));
  const auto labels = io::read_file(testing::fixture_path(fx["labels"]));
  auto short_labels = labels;
  short_labels[7] = 1;
  short_labels.pop_back();
  EXPECT_NE(error_of([&] { data::parse_idx(images, short_labels); }).find("count mismatch"), std::string::npos);
  EXPECT_NE(error_of([&] { data::parse_idx(images.substr(0, images.size() - 1), labels); }).find("truncated"),
            std::string::npos);
  EXPECT_NE(error_of([&] { data::parse_idx(images + "x", labels); }).find("trailing"), std::string::npos);
  EXPECT_NE(error_of([&] { data::parse_idx(images.substr(0, 6), labels); }).find("header"), std::string::npos);
}

TEST(Idx, WriteLoadRoundTrip) {
  data::SyntheticSpec spec;
  spec.samples = 12;
  spec.image_size = 8;
  spec.channels = 3;
  const auto set = data::generate_synthetic_dataset(spec);
  const auto dir = testing::scratch_dir("idx");
  data::write_idx(dir / "images.idx", dir / "labels.idx", set);
  const auto back = data::load_idx(dir / "images.idx", dir / "labels.idx");
  EXPECT_EQ(back.channels, 3u);
  EXPECT_EQ(back.labels, set.labels);
  for (std::size_t i = 0; i < set.pixels.size(); ++i) EXPECT_LE(std::abs(back.pixels[i] - set.pixels[i]), 0.5 / 255.0 + 1e-12);
  EXPECT_EQ(data::encode_idx_images(back), data::encode_idx_images(set));
}

TEST(Dataset, ValidateRejectsInconsistentSizes) {
  data::LabeledImageSet s;
  s.height = s.width = 2;
  s.num_classes = 2;
  s.pixels = {0, 0, 0, 0};
  s.labels = {0};
  EXPECT_NO_THROW(s.validate());
  s.labels = {2};
  EXPECT_THROW(s.validate(), InvalidInput);
  s.labels = {0, 1};
  EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(Dataset, BatchAndSubset) {
  data::SyntheticSpec spec;
  spec.samples = 6;
  spec.image_size = 6;
  const auto set = data::generate_synthetic_dataset(spec);
  const std::vector<std::size_t> idx{4, 1};
  const auto b = set.batch(idx);
  EXPECT_EQ(b.shape(), (ad::Shape{2, 1, 6, 6}));
  EXPECT_TRUE(std::equal(set.image(4).begin(), set.image(4).end(), b.values().begin()));
  const auto sub = set.subset(idx);
  EXPECT_EQ(sub.labels, (std::vector<int>{set.labels[4], set.labels[1]}));
  EXPECT_EQ(sub.params(0)[1], set.params(4)[1]);
}

TEST(Synthetic, IdentityDeltasReproduceTheBaseImage) {
  data::SyntheticSpec spec;
  spec.samples = 8;
  spec.image_size = 16;
  for (auto id : tf::params_of(tf::TransformKind::affine)) {
    spec.distributions[id] = data::ParamDistribution::delta(tf::denormalize_unit(id, tf::identity_normalized(id)));
  }
  const auto set = data::generate_synthetic_dataset(spec);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto base = data::render_base_image(static_cast<data::BaseShape>(set.labels[i]), spec);
    const auto img = set.image(i);
    ASSERT_EQ(base.size(), img.size());
    for (std::size_t k = 0; k < base.size(); ++k) EXPECT_NEAR(img[k], base[k], 1e-12);
  }
}

TEST(Synthetic, ShapesAreDistinctAndInRange) {
  data::SyntheticSpec spec;
  spec.image_size = 16;
  std::set<std::vector<double>> distinct;
  for (int s = 0; s < 4; ++s) {
    const auto img = data::render_base_image(static_cast<data::BaseShape>(s), spec);
    for (double v : img) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GT(*std::max_element(img.begin(), img.end()), 0.5);
    distinct.insert(img);
  }
  EXPECT_EQ(distinct.size(), 4u);
}

TEST(Synthetic, RotationGroundTruthFollowsItsDistribution) {
  const auto fx = testing::load_fixture("synthetic.json")["rotation_uniform"];
  const auto spec = data::SyntheticSpec::from_json(
      R"({"samples": 10000, "image_size": 4, "supersample": 1, "seed": 3,
          "distributions": {"rotation": {"type": "uniform", "lo": 0, "hi": 120, "unit": "deg"}}})");
  const auto set = data::generate_synthetic_dataset(spec);
  std::vector<double> normalized;
  for (double r : set.param_column(ParamId::rotation)) normalized.push_back(data::normalize_units(r, ParamId::rotation));
  const double lo = fx["normalized_support"][0], hi = fx["normalized_support"][1];
  const auto [mn, mx] = std::minmax_element(normalized.begin(), normalized.end());
  EXPECT_GE(*mn, lo);
  EXPECT_LE(*mx, hi + 1e-12);
  EXPECT_LT(dist::ks_statistic(normalized, [&](double v) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); }), 0.02);
  for (double t : set.param_column(ParamId::tx)) EXPECT_EQ(t, 0.0);
}

TEST(Synthetic, MixtureCdfAndSampling) {
  data::ParamDistribution d;
  d.components = {{data::ParamDistribution::Component::Type::delta, 0.0, 0.0, 1.0},
                  {data::ParamDistribution::Component::Type::uniform, 1.0, 2.0, 3.0}};
  EXPECT_NEAR(d.cdf(-0.1), 0.0, 1e-15);
  EXPECT_NEAR(d.cdf(0.0), 0.25, 1e-15);
  EXPECT_NEAR(d.cdf(1.5), 0.625, 1e-15);
  EXPECT_NEAR(d.cdf(2.0), 1.0, 1e-15);
  Rng rng(1);
  int zeros = 0;
  for (int i = 0; i < 4000; ++i) zeros += d.sample(rng) == 0.0;
  EXPECT_NEAR(zeros / 4000.0, 0.25, 0.03);
  EXPECT_THROW(data::ParamDistribution::uniform(0.0, 5.0).validate(ParamId::rotation), InvalidInput);
}

TEST(Synthetic, DeterministicInSeed) {
  data::SyntheticSpec spec;
  spec.samples = 20;
  spec.image_size = 8;
  spec.distributions[ParamId::scale] = data::ParamDistribution::uniform(0.7, 1.3);
  const auto a = data::generate_synthetic_dataset(spec);
  const auto b = data::generate_synthetic_dataset(spec);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  spec.seed = 1;
  EXPECT_NE(data::generate_synthetic_dataset(spec).ground_truth, a.ground_truth);
}

TEST(Synthetic, SpecJsonRoundTripAndErrors) {
  data::SyntheticSpec spec;
  spec.channels = 3;
  spec.distributions[ParamId::hue] = data::ParamDistribution::uniform(-0.2, 0.2);
  const auto back = data::SyntheticSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
  EXPECT_THROW(data::SyntheticSpec::from_json(R"({"classes": 9})"), InvalidInput);
  EXPECT_THROW(data::SyntheticSpec::from_json(R"({"distributions": {"hue": {"type": "uniform", "lo": 0, "hi": 0.1}}})"),
               InvalidInput);
  EXPECT_THROW(data::SyntheticSpec::from_json(R"({"distributions": {"tx": {"type": "normal"}}})"), InvalidInput);
}

TEST(Reference, NearestToIdentityPerClass) {
  data::SyntheticSpec spec;
  spec.samples = 40;
  spec.image_size = 8;
  spec.distributions[ParamId::rotation] = data::ParamDistribution::uniform(-1.0, 1.0);
  const auto set = data::generate_synthetic_dataset(spec);
  const auto idx = data::select_reference_indices(set, 3, 0);
  ASSERT_EQ(idx.size(), 12u);
  for (std::size_t c = 0; c < 4; ++c) {
    double worst_chosen = 0.0;
    std::set<std::size_t> chosen;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto i = idx[c * 3 + k];
      EXPECT_EQ(set.labels[i], static_cast<int>(c));
      chosen.insert(i);
      worst_chosen = std::max(worst_chosen, std::abs(set.params(i)[1]));
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.labels[i] == static_cast<int>(c) && !chosen.count(i)) {
        EXPECT_GE(std::abs(set.params(i)[1]), worst_chosen);
      }
    }
  }
}

TEST(Reference, SeededWithoutGroundTruth) {
  data::SyntheticSpec spec;
  spec.samples = 40;
  spec.image_size = 6;
  auto set = data::generate_synthetic_dataset(spec);
  set.param_ids.clear();
  set.ground_truth.clear();
  const auto a = data::select_reference_indices(set, 2, 5);
  EXPECT_EQ(a, data::select_reference_indices(set, 2, 5));
  EXPECT_EQ(a.size(), 8u);
  EXPECT_THROW(data::select_reference_indices(set, 11, 5), InvalidInput);
  EXPECT_THROW(data::select_reference_indices(set, 0, 5), InvalidInput);
}

TEST(Split, StratifiedAndDisjoint) {
  data::SyntheticSpec spec;
  spec.samples = 100;
  spec.image_size = 4;
  spec.supersample = 1;
  const auto set = data::generate_synthetic_dataset(spec);
  const auto [train, test] = data::split_train_test(set, 0.2, 3);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
  std::vector<std::size_t> all(train);
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
  std::vector<int> per_class(4, 0);
  for (auto i : test) ++per_class[set.labels[i]];
  EXPECT_EQ(per_class, (std::vector<int>{5, 5, 5, 5}));
  EXPECT_THROW(data::split_train_test(set, 1.0, 3), InvalidInput);
}

TEST(ParamsCsv, RoundTrip) {
  data::SyntheticSpec spec;
  spec.samples = 5;
  spec.image_size = 4;
  spec.supersample = 1;
  spec.distributions[ParamId::tx] = data::ParamDistribution::uniform(-0.3, 0.3);
  const auto set = data::generate_synthetic_dataset(spec);
  const auto dir = testing::scratch_dir("params");
  data::write_params_csv(dir / "params.csv", set);
  auto copy = set;
  copy.param_ids.clear();
  copy.ground_truth.clear();
  data::read_params_csv(dir / "params.csv", copy);
  EXPECT_EQ(copy.param_ids, set.param_ids);
  for (std::size_t i = 0; i < set.ground_truth.size(); ++i) EXPECT_NEAR(copy.ground_truth[i], set.ground_truth[i], 1e-12);
  auto small = set.subset(std::vector<std::size_t>{0, 1});
  EXPECT_THROW(data::read_params_csv(dir / "params.csv", small), InvalidInput);
}

}  // namespace
}  // namespace xform
