#pragma once

#include "regpoison/dataset.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>

namespace regpoison {

enum class RegressorKind { Ridge, Lasso, ElasticNet, Huber, KernelRidge, SVR, MLP };

std::string_view to_string(RegressorKind kind) noexcept;
RegressorKind regressor_kind_from_string(std::string_view name);
const std::array<RegressorKind, 7>& all_regressor_kinds() noexcept;
bool is_kernel_kind(RegressorKind kind) noexcept;

/// Hyperparameter keys understood by `fit`:
///   alpha          regularization strength (all kinds except SVR)
///   l1_ratio       ElasticNet mixing, in [0, 1]
///   delta          Huber threshold, in units of the robust residual scale
///   gamma          RBF inverse width, k(a, b) = exp(-gamma |a - b|^2)
///   C, tube        SVR box bound and epsilon-insensitive tube half-width
///   hidden, learning_rate, epochs, batch_size, momentum   MLP training
struct RegressorSpec {
  RegressorKind kind = RegressorKind::Ridge;
  std::map<std::string, double> hyperparams;
  std::uint64_t seed = 0;

  /// Value for `key`, falling back to the kind's default.
  double get(const std::string& key) const;
  /// Throws InvalidArgument on non-positive strengths or l1_ratio outside [0, 1].
  void validate() const;
};

RegressorSpec default_spec(RegressorKind kind);

struct LinearParams {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

/// f(x) = offset + sum_i dual_i k(x, support_i)
struct KernelParams {
  Eigen::MatrixXd support;
  Eigen::VectorXd dual;
  double offset = 0.0;
  double gamma = 1.0;
};

/// f(x) = output_weights . tanh(hidden_weights x + hidden_bias) + output_bias
struct MlpParams {
  Eigen::MatrixXd hidden_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::VectorXd output_weights;
  double output_bias = 0.0;
};

using ModelParams = std::variant<LinearParams, KernelParams, MlpParams>;

struct FittedModel {
  RegressorSpec spec;
  ModelParams params;
  /// Unregularized MSE on the data the model was fit on.
  double training_loss = 0.0;
  /// False when the iteration budget ran out before the tolerance was met;
  /// the parameters are then the last iterate.
  bool converged = true;
  std::size_t iterations = 0;

  std::size_t input_dims() const;
};

FittedModel fit(const RegressorSpec& spec, const Dataset& data);

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& features);

/// MSE of the model's predictions against `data.targets`.
double train_loss(const FittedModel& model, const Dataset& data);

}  // namespace regpoison
