#pragma once

#include "regpoison/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace regpoison {

struct MetricsReport {
  double mse = 0.0;
  double mae_original_units = 0.0;
  double acceptable_rate_pct = 0.0;
  std::size_t n_test = 0;
};

double mse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

/// Mean absolute error; when `scaling` is given both vectors are mapped back
/// to original target units first.
double mae(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, const ScalingParams* scaling = nullptr);

/// Percentage of predictions within `band` * |truth| of the truth. A zero
/// truth only accepts an exact prediction.
double acceptable_rate(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, double band = 0.2);

/// Scaled-unit MSE plus MAE and acceptable rate in original units (scaled
/// units when the dataset carries no scaling).
MetricsReport evaluate(const Eigen::VectorXd& y_true_scaled, const Eigen::VectorXd& y_pred_scaled,
                       const ScalingParams* scaling);

/// Poisoned-vs-clean and defended-vs-clean comparison columns. Undefined entries (a zero clean metric)
/// are empty rather than infinite.
struct RatioRow {
  std::optional<double> mae_pc;
  std::optional<double> mae_dc;
  /// 100 (clean - poisoned) / clean on the acceptable rate: positive means fewer acceptable predictions.
  std::optional<double> accbl_pc;
  std::optional<double> accbl_dc;
};

RatioRow ratio_report(const MetricsReport& clean, const MetricsReport& poisoned,
                      const std::optional<MetricsReport>& defended);

/// Lower median (element n/2 - 1 of the sorted values for even n). Empty input throws.
double lower_median(std::vector<double> values);

}  // namespace regpoison
