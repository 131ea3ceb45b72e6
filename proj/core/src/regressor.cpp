#include "regpoison/regressor.hpp"

#include "regpoison/error.hpp"
#include "regpoison/solvers.hpp"

#include <cmath>

namespace regpoison {

namespace {

constexpr std::array<RegressorKind, 7> kAllKinds = {
    RegressorKind::Ridge,       RegressorKind::Lasso, RegressorKind::ElasticNet, RegressorKind::Huber,
    RegressorKind::KernelRidge, RegressorKind::SVR,   RegressorKind::MLP,
};

std::size_t as_count(double v, const char* key) {
  if (!(v >= 1.0) || v != std::floor(v)) {
    fail(ErrorCode::InvalidArgument, std::string(key) + " must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

double mse_of(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  return (pred - target).squaredNorm() / static_cast<double>(target.size());
}

}  // namespace

std::string_view to_string(RegressorKind kind) noexcept {
  switch (kind) {
    case RegressorKind::Ridge: return "ridge";
    case RegressorKind::Lasso: return "lasso";
    case RegressorKind::ElasticNet: return "elastic_net";
    case RegressorKind::Huber: return "huber";
    case RegressorKind::KernelRidge: return "kernel_ridge";
    case RegressorKind::SVR: return "svr";
    case RegressorKind::MLP: return "mlp";
  }
  return "ridge";
}

RegressorKind regressor_kind_from_string(std::string_view name) {
  for (const auto kind : kAllKinds) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "elasticnet") return RegressorKind::ElasticNet;
  if (name == "kernelridge" || name == "krr") return RegressorKind::KernelRidge;
  fail(ErrorCode::InvalidArgument, "unknown regressor kind '" + std::string(name) + "'");
}

const std::array<RegressorKind, 7>& all_regressor_kinds() noexcept { return kAllKinds; }

bool is_kernel_kind(RegressorKind kind) noexcept {
  return kind == RegressorKind::KernelRidge || kind == RegressorKind::SVR;
}

RegressorSpec default_spec(RegressorKind kind) {
  RegressorSpec spec;
  spec.kind = kind;
  switch (kind) {
    case RegressorKind::Ridge: spec.hyperparams = {{"alpha", 1e-2}}; break;
    case RegressorKind::Lasso: spec.hyperparams = {{"alpha", 1e-3}}; break;
    case RegressorKind::ElasticNet: spec.hyperparams = {{"alpha", 1e-3}, {"l1_ratio", 0.5}}; break;
    case RegressorKind::Huber: spec.hyperparams = {{"alpha", 1e-3}, {"delta", 1.0}}; break;
    case RegressorKind::KernelRidge: spec.hyperparams = {{"alpha", 1e-2}, {"gamma", 1.0}}; break;
    case RegressorKind::SVR: spec.hyperparams = {{"C", 1.0}, {"tube", 0.01}, {"gamma", 1.0}}; break;
    case RegressorKind::MLP:
      spec.hyperparams = {{"hidden", 16},    {"alpha", 1e-4},     {"learning_rate", 0.01},
                          {"epochs", 500},   {"batch_size", 32},  {"momentum", 0.9},
                          {"tol", 1e-6}};
      break;
  }
  return spec;
}

double RegressorSpec::get(const std::string& key) const {
  if (const auto it = hyperparams.find(key); it != hyperparams.end()) return it->second;
  const auto defaults = default_spec(kind);
  if (const auto it = defaults.hyperparams.find(key); it != defaults.hyperparams.end()) return it->second;
  fail(ErrorCode::InvalidArgument, "hyperparameter '" + key + "' is not defined for " + std::string(to_string(kind)));
}

void RegressorSpec::validate() const {
  const auto positive = [&](const char* key) {
    const double v = get(key);
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, std::string(key) + " must be > 0");
  };
  switch (kind) {
    case RegressorKind::Ridge:
    case RegressorKind::Lasso: positive("alpha"); break;
    case RegressorKind::ElasticNet: {
      positive("alpha");
      const double r = get("l1_ratio");
      if (!(r >= 0.0 && r <= 1.0)) fail(ErrorCode::InvalidArgument, "l1_ratio must lie in [0, 1]");
      break;
    }
    case RegressorKind::Huber:
      positive("alpha");
      positive("delta");
      break;
    case RegressorKind::KernelRidge:
      positive("alpha");
      positive("gamma");
      break;
    case RegressorKind::SVR:
      positive("C");
      positive("gamma");
      if (!(get("tube") >= 0.0)) fail(ErrorCode::InvalidArgument, "tube must be >= 0");
      break;
    case RegressorKind::MLP:
      positive("alpha");
      positive("learning_rate");
      as_count(get("hidden"), "hidden");
      as_count(get("epochs"), "epochs");
      as_count(get("batch_size"), "batch_size");
      if (!(get("tol") >= 0.0)) fail(ErrorCode::InvalidArgument, "tol must be >= 0");
      if (!(get("momentum") >= 0.0 && get("momentum") < 1.0)) {
        fail(ErrorCode::InvalidArgument, "momentum must lie in [0, 1)");
      }
      break;
  }
}

std::size_t FittedModel::input_dims() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          return static_cast<std::size_t>(p.weights.size());
        } else if constexpr (std::is_same_v<T, KernelParams>) {
          return static_cast<std::size_t>(p.support.cols());
        } else {
          return static_cast<std::size_t>(p.hidden_weights.cols());
        }
      },
      params);
}

FittedModel fit(const RegressorSpec& spec, const Dataset& data) {
  spec.validate();
  if (data.rows() < 2) fail(ErrorCode::TooFewRows, "fit needs at least 2 rows");
  if (data.dims() < 1) fail(ErrorCode::DimensionMismatch, "fit needs at least one feature");

  const Eigen::MatrixXd& x = data.features;
  const Eigen::VectorXd& y = data.targets;
  FittedModel model;
  model.spec = spec;
  switch (spec.kind) {
    case RegressorKind::Ridge:
      model.params = solvers::ridge(x, y, spec.get("alpha"));
      model.iterations = 1;
      break;
    case RegressorKind::Lasso:
    case RegressorKind::ElasticNet: {
      const double ratio = spec.kind == RegressorKind::Lasso ? 1.0 : spec.get("l1_ratio");
      auto result = solvers::elastic_net(x, y, spec.get("alpha"), ratio);
      model.params = std::move(result.params);
      model.converged = result.converged;
      model.iterations = result.sweeps;
      break;
    }
    case RegressorKind::Huber: {
      auto result = solvers::huber(x, y, spec.get("alpha"), spec.get("delta"));
      model.params = std::move(result.params);
      model.converged = result.converged;
      model.iterations = result.iterations;
      break;
    }
    case RegressorKind::KernelRidge:
      model.params = solvers::kernel_ridge(x, y, spec.get("alpha"), spec.get("gamma"));
      model.iterations = 1;
      break;
    case RegressorKind::SVR: {
      auto result = solvers::svr(x, y, spec.get("C"), spec.get("tube"), spec.get("gamma"), spec.seed);
      model.params = std::move(result.params);
      model.converged = result.converged;
      model.iterations = result.sweeps;
      break;
    }
    case RegressorKind::MLP: {
      solvers::MlpTraining config;
      config.hidden = as_count(spec.get("hidden"), "hidden");
      config.alpha = spec.get("alpha");
      config.learning_rate = spec.get("learning_rate");
      config.momentum = spec.get("momentum");
      config.epochs = as_count(spec.get("epochs"), "epochs");
      config.batch_size = as_count(spec.get("batch_size"), "batch_size");
      config.tol = spec.get("tol");
      config.seed = spec.seed;
      auto result = solvers::mlp_train(x, y, config);
      model.params = std::move(result.params);
      model.converged = result.converged;
      model.iterations = result.epochs_run;
      break;
    }
  }
  model.training_loss = mse_of(predict(model, x), y);
  return model;
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() == 0) return Eigen::VectorXd(0);
  if (static_cast<std::size_t>(features.cols()) != model.input_dims()) {
    fail(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.input_dims()) + " features, got " +
                                           std::to_string(features.cols()));
  }
  return std::visit(
      [&](const auto& p) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          return (features * p.weights).array() + p.intercept;
        } else if constexpr (std::is_same_v<T, KernelParams>) {
          return (solvers::rbf_kernel(features, p.support, p.gamma) * p.dual).array() + p.offset;
        } else {
          return solvers::mlp_forward(p, features);
        }
      },
      model.params);
}

double train_loss(const FittedModel& model, const Dataset& data) {
  if (data.rows() == 0) fail(ErrorCode::EmptyInput, "train_loss on an empty dataset");
  return mse_of(predict(model, data.features), data.targets);
}

}  // namespace regpoison
