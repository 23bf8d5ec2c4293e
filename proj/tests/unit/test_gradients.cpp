#include <gtest/gtest.h>

#include <cctype>

#include "grad_suite.hpp"

namespace xform::testing {
namespace {

class GradientSuite : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientSuite, MatchesCentralDifferences) {
  const auto& c = GetParam();
  const auto result = c.run();
  EXPECT_LT(result.max_rel_error, c.tol) << c.name << ": worst " << result.worst_input;
}

std::string case_name(const ::testing::TestParamInfo<GradCase>& info) {
  std::string out;
  for (char ch : info.param.name) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

INSTANTIATE_TEST_SUITE_P(All, GradientSuite, ::testing::ValuesIn(gradient_suite()), case_name);

}  // namespace
}  // namespace xform::testing
