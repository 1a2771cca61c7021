#include <gtest/gtest.h>

#include "hmx/verifier.hpp"

using namespace hmx;

namespace {

VerifyConfig small_config() {
  VerifyConfig c;
  c.tmax_samples = 200;
  c.scan_points = 2000;
  c.ratio_samples = 200;
  c.bound_samples = 500;
  c.domination_max_layer = 2;
  c.random_functions = 2;
  return c;
}

}  // namespace

TEST(Verifier, SignChangeCounter) {
  const double x[] = {0.5}, y[] = {3.0};
  double lo = 0, hi = 0;
  EXPECT_EQ(slope_sign_changes(x, y, 1e-4, 1e4, 1000, &lo, &hi), 1);
  const double tm = t_max(x, y).t_m;
  EXPECT_LE(lo, tm);
  EXPECT_GE(hi, tm);
}

TEST(Verifier, StatusRules) {
  CheckReport r;
  r.finalize(0.05);
  EXPECT_EQ(r.status, CheckStatus::pass);
  r.record_failure("clipped", true);
  r.finalize(0.05);
  EXPECT_EQ(r.status, CheckStatus::inconclusive);
  EXPECT_TRUE(r.acceptable());
  r.record_failure("real");
  r.finalize(0.05);
  EXPECT_EQ(r.status, CheckStatus::fail);
  CheckReport u;
  u.unstable = true;
  u.finalize(0.05);
  EXPECT_EQ(u.status, CheckStatus::fail);
  CheckReport lossy;
  lossy.truncation_loss = 0.2;
  lossy.finalize(0.05);
  EXPECT_EQ(lossy.status, CheckStatus::inconclusive);
}

TEST(Verifier, KernelCheckPasses) {
  const CheckReport r = check_kernel_identities(small_config());
  EXPECT_EQ(r.status, CheckStatus::pass) << r.to_json().dump(1);
  EXPECT_LT(r.observed_constant, 1e-6);
}

TEST(Verifier, TmaxCheckPasses) {
  const CheckReport r = check_tmax_lemmas(small_config());
  EXPECT_EQ(r.status, CheckStatus::pass) << r.to_json().dump(1);
  EXPECT_EQ(r.samples, 200u);
  EXPECT_EQ(r.details["first_layer_samples"].get<int>(), 50);
}

TEST(Verifier, RatioCheckIsStable) {
  const CheckReport r = check_far_kernel_ratio(small_config());
  EXPECT_EQ(r.status, CheckStatus::pass) << r.to_json().dump(1);
  EXPECT_TRUE(std::isfinite(r.details["comparability"]["log_constant_2n"].get<double>()));
  EXPECT_LT(r.details["far_kernel"]["drift"].get<double>(), 0.1);
}

TEST(Verifier, DominationCheckPasses) {
  const CheckReport r = check_operator_dominations(small_config());
  EXPECT_EQ(r.status, CheckStatus::pass) << r.to_json().dump(1);
  EXPECT_EQ(r.details["violations_far"].get<int>(), 0);
  EXPECT_EQ(r.details["violations_sharp"].get<int>(), 0);
  EXPECT_EQ(r.details["violations_loc"].get<int>(), 0);
  for (const auto& e : r.details["mfar_plus_over_mtheta"]) EXPECT_TRUE(std::isfinite(e["sup_ratio"].get<double>()));
}

TEST(Verifier, WeightsCheckPasses) {
  const CheckReport r = check_weight_inclusions(small_config());
  EXPECT_EQ(r.status, CheckStatus::pass) << r.to_json().dump(1);
  EXPECT_NEAR(r.details["sqrt_ratio_unit_cube"].get<double>(), 2 / std::sqrt(3.0), 1e-12);
  EXPECT_GT(r.details["poly4_classical_growth"].get<double>(), 1e3);
}

TEST(Verifier, ReportsAreDeterministicAndOmitRuntime) {
  const VerifyConfig c = small_config();
  const auto a = report_json({check_tmax_lemmas(c), check_far_kernel_ratio(c)}, c).dump();
  const auto b = report_json({check_tmax_lemmas(c), check_far_kernel_ratio(c)}, c).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.find("runtime"), std::string::npos);
  VerifyConfig other = c;
  other.seed = 7;
  EXPECT_NE(report_json({check_tmax_lemmas(other)}, other).dump(), report_json({check_tmax_lemmas(c)}, c).dump());
}

TEST(Verifier, UnknownCheckIsUsageError) { EXPECT_THROW(run_check("nope", VerifyConfig{}), UsageError); }
