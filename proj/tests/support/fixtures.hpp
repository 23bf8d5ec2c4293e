#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace xform::testing {

std::filesystem::path fixture_path(const std::string& relative);
nlohmann::json load_fixture(const std::string& relative);

std::vector<double> doubles(const nlohmann::json& array);
/// Row-major flattening of a nested array of numbers.
std::vector<double> flatten_doubles(const nlohmann::json& nested);

/// Fresh empty directory under the system temp dir, named after `tag`.
std::filesystem::path scratch_dir(const std::string& tag);

}  // namespace xform::testing
