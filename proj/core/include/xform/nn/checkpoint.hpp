#pragma once

// Checkpoint container (all integers little-endian):
//
//   bytes 0..7   magic "XFCKPT01"
//   u64          number of arrays
//   per array:
//     u32        name length, then the UTF-8 name
//     u32        rank, then rank x u64 dimensions
//     f64 x N    values, N = product of dimensions (IEEE-754 binary64)
//
// Architecture hyperparameters live in a sibling plain-text manifest of
// "key = value" lines.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xform/ad/tensor.hpp"
#include "xform/nn/networks.hpp"

namespace xform::nn {

struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<double> values;
};

std::string encode_checkpoint(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path);

std::vector<NamedArray> snapshot(const std::vector<NamedParam>& params);
/// Copies stored values into matching parameters; names and shapes must agree.
void restore(const std::vector<NamedArray>& arrays, const std::vector<NamedParam>& params);

void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);

}  // namespace xform::nn
