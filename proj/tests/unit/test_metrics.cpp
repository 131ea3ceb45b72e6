#include "regpoison/error.hpp"
#include "regpoison/metrics.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace regpoison;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out[i++] = x;
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

ScalingParams target_range(double lo, double hi) {
  ScalingParams s;
  s.min = vec({0.0, lo});
  s.max = vec({1.0, hi});
  return s;
}

}  // namespace

TEST(Mse, Examples) {
  EXPECT_DOUBLE_EQ(mse(vec({1, 2}), vec({1, 2})), 0.0);
  EXPECT_DOUBLE_EQ(mse(vec({0, 0}), vec({1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(mse(vec({0, 1}), vec({1, 1})), 0.5);
}

TEST(Mae, Examples) {
  EXPECT_DOUBLE_EQ(mae(vec({1, 3}), vec({2, 2})), 1.0);
  EXPECT_DOUBLE_EQ(mae(vec({0.3, 0.7}), vec({0.3, 0.7})), 0.0);
  const auto s = target_range(0.0, 40.0);
  EXPECT_NEAR(mae(vec({0.5}), vec({0.75}), &s), 10.0, 1e-12);
}

TEST(AcceptableRate, Band) {
  EXPECT_DOUBLE_EQ(acceptable_rate(vec({10}), vec({11.9})), 100.0);
  EXPECT_DOUBLE_EQ(acceptable_rate(vec({10}), vec({12.1})), 0.0);
  EXPECT_DOUBLE_EQ(acceptable_rate(vec({10, 10}), vec({11.9, 12.1})), 50.0);
  EXPECT_DOUBLE_EQ(acceptable_rate(vec({3, -4, 0}), vec({3, -4, 0})), 100.0);
  EXPECT_DOUBLE_EQ(acceptable_rate(vec({0}), vec({0.1})), 0.0);
}

TEST(Metrics, PermutationInvariantAndNonNegative) {
  const auto a = vec({0.1, 0.9, 0.4, 0.25});
  const auto b = vec({0.2, 0.5, 0.45, 0.0});
  const auto ap = vec({0.4, 0.1, 0.25, 0.9});
  const auto bp = vec({0.45, 0.2, 0.0, 0.5});
  EXPECT_GE(mse(a, b), 0.0);
  EXPECT_GE(mae(a, b), 0.0);
  EXPECT_NEAR(mse(a, b), mse(ap, bp), 1e-15);
  EXPECT_NEAR(mae(a, b), mae(ap, bp), 1e-15);
  EXPECT_DOUBLE_EQ(acceptable_rate(a, b), acceptable_rate(ap, bp));
}

TEST(Metrics, InputErrors) {
  EXPECT_EQ(code_of([] { mse(vec({1, 2}), vec({1})); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { mae(Eigen::VectorXd(), Eigen::VectorXd()); }), ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([] { acceptable_rate(vec({1}), vec({1, 2})); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { lower_median({}); }), ErrorCode::EmptyInput);
}

TEST(Evaluate, UsesOriginalUnitsForMaeAndRate) {
  const auto s = target_range(0.0, 40.0);
  const auto r = evaluate(vec({0.5, 0.25}), vec({0.75, 0.25}), &s);
  EXPECT_NEAR(r.mse, 0.0625 / 2, 1e-15);
  EXPECT_NEAR(r.mae_original_units, 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.acceptable_rate_pct, 50.0);
  EXPECT_EQ(r.n_test, 2u);
}

TEST(RatioReport, TableArithmetic) {
  MetricsReport clean{0.0, 8.49, 80.0, 100};
  MetricsReport poisoned{0.0, 11.07, 63.0, 100};
  const auto r = ratio_report(clean, poisoned, std::nullopt);
  EXPECT_NEAR(*r.mae_pc, 11.07 / 8.49, 1e-12);
  EXPECT_NEAR(*r.mae_pc, 1.30, 0.005);
  EXPECT_NEAR(*r.accbl_pc, 21.25, 1e-12);
  EXPECT_FALSE(r.mae_dc.has_value());
  EXPECT_FALSE(r.accbl_dc.has_value());
}

TEST(RatioReport, IdenticalReportsGiveUnitRatios) {
  MetricsReport m{0.01, 8.5, 60.0, 10};
  const auto r = ratio_report(m, m, m);
  EXPECT_EQ(*r.mae_pc, 1.0);
  EXPECT_EQ(*r.mae_dc, 1.0);
  EXPECT_EQ(*r.accbl_pc, 0.0);
  EXPECT_EQ(*r.accbl_dc, 0.0);
}

TEST(RatioReport, ZeroCleanMetricLeavesRatioEmpty) {
  MetricsReport clean{0.0, 0.0, 0.0, 10};
  MetricsReport poisoned{0.1, 2.0, 10.0, 10};
  const auto r = ratio_report(clean, poisoned, poisoned);
  EXPECT_FALSE(r.mae_pc.has_value());
  EXPECT_FALSE(r.accbl_pc.has_value());
  EXPECT_FALSE(r.mae_dc.has_value());
}

TEST(LowerMedian, OddAndEven) {
  EXPECT_DOUBLE_EQ(lower_median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(lower_median({4.0, 1.0, 3.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(lower_median({7.0}), 7.0);
}
