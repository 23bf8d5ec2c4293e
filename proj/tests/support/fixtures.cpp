#include "fixtures.hpp"

#include <unistd.h>

#include "xform/io.hpp"

namespace xform::testing {

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(XFORM_FIXTURE_DIR) / relative;
}

nlohmann::json load_fixture(const std::string& relative) {
  return nlohmann::json::parse(io::read_file(fixture_path(relative)));
}

std::vector<double> doubles(const nlohmann::json& array) { return array.get<std::vector<double>>(); }

std::vector<double> flatten_doubles(const nlohmann::json& nested) {
  std::vector<double> out;
  if (nested.is_number()) {
    out.push_back(nested.get<double>());
    return out;
  }
  for (const auto& item : nested) {
    const auto part = flatten_doubles(item);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("xform-" + tag + "-" + std::to_string(static_cast<long>(::getpid())));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace xform::testing
