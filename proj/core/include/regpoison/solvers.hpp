#pragma once

// Numerical kernels behind `fit`. Exposed so tests can check each solver
// against its own optimality conditions.

#include "regpoison/regressor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace regpoison::solvers {

/// argmin ||y - Xw - b||^2 + alpha ||w||^2 with an unpenalized intercept,
/// solved through the normal equations of the centered problem.
LinearParams ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha);

struct CoordinateDescentResult {
  LinearParams params;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// argmin (1/2n)||y - Xw - b||^2 + alpha l1_ratio |w|_1 + (alpha (1 - l1_ratio) / 2) ||w||^2
/// by cyclic coordinate descent with soft-thresholding. Stops when the
/// largest coefficient change in a sweep drops below `tol`.
CoordinateDescentResult elastic_net(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                                    double l1_ratio, double tol = 1e-7, std::size_t max_sweeps = 1000);

double soft_threshold(double value, double threshold) noexcept;

/// sum_i H_c(r_i) + (alpha / 2) ||w||^2, H_c the Huber function with threshold c.
double huber_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LinearParams& params,
                       double alpha, double threshold);

struct HuberResult {
  LinearParams params;
  std::size_t iterations = 0;
  bool converged = false;
  /// Objective after each reweighting step (fixed threshold), starting with the initial point.
  std::vector<double> objective_trace;
  double threshold = 0.0;
};

/// IRLS for the Huber objective at a fixed residual threshold. Each step
/// minimizes the quadratic majorizer, so the objective never increases.
HuberResult huber_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double threshold,
                       const LinearParams& init, double tol = 1e-7, std::size_t max_iterations = 1000);

/// 1.4826 * median absolute deviation, floored away from zero.
double robust_scale(const Eigen::VectorXd& residuals);

/// Huber regression with threshold delta * s, where s is the robust scale of
/// the residuals. s is taken from a ridge start, refined once from the
/// first Huber solution, then held fixed for the final IRLS run.
/// The loss is measured in units of s (sum of H(r) / s), so the penalty
/// handed to IRLS is alpha * s and alpha is comparable across target scales.
HuberResult huber(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double delta,
                  double tol = 1e-7, std::size_t max_iterations = 1000);

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

/// Solves (K + alpha I) c = y - mean(y).
KernelParams kernel_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha, double gamma);

struct SvrResult {
  KernelParams params;
  std::size_t sweeps = 0;
  bool converged = false;
  /// Dual objective after every sweep, starting at the zero point.
  std::vector<double> dual_trace;
};

/// Dual of the epsilon-insensitive kernel regression on mean-centered targets,
///   max_b  -1/2 b'Kb + b'y - tube |b|_1   s.t. -C <= b_i <= C,
/// where b_i = a_i - a_i* folds the two box-constrained multipliers of point i.
/// Each update maximizes exactly over the pair (a_i, a_i*).
SvrResult svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c, double tube, double gamma,
              std::uint64_t seed, double tol = 1e-3, std::size_t max_sweeps = 1000);

double svr_dual_objective(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& centered_y,
                          const Eigen::VectorXd& beta, double tube);

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x);

MlpParams mlp_init(std::size_t inputs, std::size_t hidden, double output_bias, std::uint64_t seed);

/// (1/2n) sum r_i^2 + (alpha / 2n)(|W|^2 + |v|^2). Writes the gradient into
/// `gradient` when non-null.
double mlp_objective(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                     MlpParams* gradient);

struct MlpTraining {
  std::size_t hidden = 16;
  double alpha = 1e-4;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  /// Stop once the epoch-mean loss has failed to improve on the best seen
  /// by more than `tol` for `patience` consecutive epochs.
  double tol = 1e-6;
  std::size_t patience = 10;
  /// Train on standardized inputs and targets, then fold the affine maps
  /// back into the returned parameters. The penalty applies in the
  /// standardized space.
  bool standardize = true;
  std::uint64_t seed = 0;
};

struct MlpResult {
  MlpParams params;
  bool finite = true;
  bool converged = false;
  std::size_t epochs_run = 0;
};

/// Mini-batch gradient descent with heavy-ball momentum.
MlpResult mlp_train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpTraining& config);

}  // namespace regpoison::solvers
