#include "xform/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "xform/error.hpp"
#include "xform/io.hpp"
#include "xform/random.hpp"

namespace xform::data {

std::span<const double> LabeledImageSet::image(std::size_t i) const {
  if (i >= size()) throw InvalidInput("image index " + std::to_string(i) + " out of range");
  return std::span<const double>(pixels).subspan(i * image_size(), image_size());
}

std::span<const double> LabeledImageSet::params(std::size_t i) const {
  if (i >= size()) throw InvalidInput("image index " + std::to_string(i) + " out of range");
  return std::span<const double>(ground_truth).subspan(i * param_ids.size(), param_ids.size());
}

std::vector<double> LabeledImageSet::param_column(tf::ParamId id) const {
  auto it = std::find(param_ids.begin(), param_ids.end(), id);
  if (it == param_ids.end()) {
    throw InvalidInput("dataset has no ground truth for parameter '" + std::string(tf::param_name(id)) + "'");
  }
  const std::size_t col = static_cast<std::size_t>(it - param_ids.begin());
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = ground_truth[i * param_ids.size() + col];
  return out;
}

ad::Var LabeledImageSet::batch(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * image_size());
  for (std::size_t i : indices) {
    auto img = image(i);
    values.insert(values.end(), img.begin(), img.end());
  }
  return ad::Var::constant({indices.size(), channels, height, width}, std::move(values));
}

LabeledImageSet LabeledImageSet::subset(std::span<const std::size_t> indices) const {
  LabeledImageSet out;
  out.channels = channels;
  out.height = height;
  out.width = width;
  out.num_classes = num_classes;
  out.param_ids = param_ids;
  out.pixels.reserve(indices.size() * image_size());
  for (std::size_t i : indices) {
    auto img = image(i);
    out.pixels.insert(out.pixels.end(), img.begin(), img.end());
    out.labels.push_back(labels[i]);
    if (has_ground_truth()) {
      auto p = params(i);
      out.ground_truth.insert(out.ground_truth.end(), p.begin(), p.end());
    }
  }
  return out;
}

void LabeledImageSet::validate() const {
  if (pixels.size() != size() * image_size()) {
    throw InvalidInput("dataset: " + std::to_string(pixels.size()) + " pixel values for " +
                       std::to_string(size()) + " images of " + std::to_string(image_size()));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw InvalidInput("dataset: label " + std::to_string(label) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
  }
  if (ground_truth.size() != size() * param_ids.size()) {
    throw InvalidInput("dataset: ground-truth table does not match the image count");
  }
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const LabeledImageSet& data) {
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class.at(static_cast<std::size_t>(data.labels[i])).push_back(i);
  return by_class;
}

double identity_distance(const LabeledImageSet& data, std::size_t i) {
  auto p = data.params(i);
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const tf::ParamId id = data.param_ids[k];
    const double diff = tf::normalize_unit(id, p[k]) - tf::identity_normalized(id);
    d += diff * diff;
  }
  return d;
}

}  // namespace

std::vector<std::size_t> select_reference_indices(const LabeledImageSet& data, std::size_t n_per_class,
                                                  std::uint64_t seed) {
  if (data.size() == 0) throw InvalidInput("reference subset: dataset is empty");
  if (n_per_class == 0) throw InvalidInput("reference subset: n_per_class must be at least 1");
  auto by_class = indices_by_class(data);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < n_per_class) {
      throw InvalidInput("reference subset: class " + std::to_string(c) + " has " +
                         std::to_string(members.size()) + " images, fewer than n_per_class = " +
                         std::to_string(n_per_class));
    }
    if (data.has_ground_truth()) {
      std::vector<double> dist(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) dist[k] = identity_distance(data, members[k]);
      std::vector<std::size_t> order(members.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
      for (std::size_t k = 0; k < n_per_class; ++k) chosen.push_back(members[order[k]]);
    } else {
      Rng rng(derive_seed(seed, c));
      std::shuffle(members.begin(), members.end(), rng);
      std::sort(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_per_class));
      chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_per_class));
    }
  }
  return chosen;
}

LabeledImageSet select_reference_subset(const LabeledImageSet& data, std::size_t n_per_class, std::uint64_t seed) {
  auto idx = select_reference_indices(data, n_per_class, seed);
  return data.subset(idx);
}

double normalize_units(double physical, tf::ParamId id) { return tf::normalize_unit(id, physical); }

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_test(const LabeledImageSet& data,
                                                                               double test_fraction,
                                                                               std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidInput("test_fraction must lie in (0, 1)");
  auto by_class = indices_by_class(data);
  std::vector<std::size_t> train, test;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    Rng rng(derive_seed(seed, 1000 + c));
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    test.insert(test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

void write_params_csv(const std::filesystem::path& path, const LabeledImageSet& data) {
  std::ostringstream out;
  out << "index";
  for (auto id : data.param_ids) out << ',' << tf::param_name(id);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << i;
    for (double v : data.params(i)) out << ',' << io::format_double(v);
    out << '\n';
  }
  io::atomic_write(path, out.str());
}

void read_params_csv(const std::filesystem::path& path, LabeledImageSet& data) {
  std::istringstream in(io::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("params csv: missing header");
  auto header = io::split_csv_line(line);
  if (header.empty() || header[0] != "index") throw InvalidInput("params csv: header must start with 'index'");
  std::vector<tf::ParamId> ids;
  for (std::size_t k = 1; k < header.size(); ++k) ids.push_back(tf::parse_param(header[k]));
  std::vector<double> table;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = io::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InvalidInput("params csv: row " + std::to_string(row + 1) + " has " + std::to_string(fields.size()) +
                         " fields, expected " + std::to_string(header.size()));
    }
    if (fields[0] != std::to_string(row)) {
      throw InvalidInput("params csv: row " + std::to_string(row + 1) + " has index " + fields[0]);
    }
    for (std::size_t k = 1; k < fields.size(); ++k) table.push_back(io::parse_double(fields[k]));
    ++row;
  }
  if (row != data.size()) {
    throw InvalidInput("params csv: " + std::to_string(row) + " rows for " + std::to_string(data.size()) + " images");
  }
  data.param_ids = std::move(ids);
  data.ground_truth = std::move(table);
}

}  // namespace xform::data
