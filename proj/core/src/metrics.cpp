#include "regpoison/metrics.hpp"

#include "regpoison/error.hpp"

#include <algorithm>
#include <cmath>

namespace regpoison {

namespace {

void check_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "metric inputs differ in length");
  if (a.size() == 0) fail(ErrorCode::EmptyInput, "metric inputs are empty");
}

std::optional<double> safe_ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::optional<double> decrease_pct(double clean, double other) {
  if (clean == 0.0) return std::nullopt;
  return 100.0 * (clean - other) / clean;
}

}  // namespace

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  check_pair(y_true, y_pred);
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double mae(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, const ScalingParams* scaling) {
  check_pair(y_true, y_pred);
  if (scaling) {
    return (invert_targets(*scaling, y_true) - invert_targets(*scaling, y_pred)).cwiseAbs().mean();
  }
  return (y_true - y_pred).cwiseAbs().mean();
}

double acceptable_rate(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, double band) {
  check_pair(y_true, y_pred);
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const double t = y_true[i];
    const double p = y_pred[i];
    if (t == 0.0 ? p == 0.0 : std::abs(p - t) <= band * std::abs(t)) ++ok;
  }
  return 100.0 * static_cast<double>(ok) / static_cast<double>(y_true.size());
}

MetricsReport evaluate(const Eigen::VectorXd& y_true_scaled, const Eigen::VectorXd& y_pred_scaled,
                       const ScalingParams* scaling) {
  MetricsReport r;
  r.mse = mse(y_true_scaled, y_pred_scaled);
  r.n_test = static_cast<std::size_t>(y_true_scaled.size());
  if (scaling && !scaling->target_constant()) {
    const auto t = invert_targets(*scaling, y_true_scaled);
    const auto p = invert_targets(*scaling, y_pred_scaled);
    r.mae_original_units = mae(t, p);
    r.acceptable_rate_pct = acceptable_rate(t, p);
  } else {
    r.mae_original_units = mae(y_true_scaled, y_pred_scaled);
    r.acceptable_rate_pct = acceptable_rate(y_true_scaled, y_pred_scaled);
  }
  return r;
}

RatioRow ratio_report(const MetricsReport& clean, const MetricsReport& poisoned,
                      const std::optional<MetricsReport>& defended) {
  RatioRow row;
  row.mae_pc = safe_ratio(poisoned.mae_original_units, clean.mae_original_units);
  row.accbl_pc = decrease_pct(clean.acceptable_rate_pct, poisoned.acceptable_rate_pct);
  if (defended) {
    row.mae_dc = safe_ratio(defended->mae_original_units, clean.mae_original_units);
    row.accbl_dc = decrease_pct(clean.acceptable_rate_pct, defended->acceptable_rate_pct);
  }
  return row;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "median of an empty list");
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace regpoison
