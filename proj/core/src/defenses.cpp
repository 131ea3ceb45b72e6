#include "regpoison/defenses.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include <algorithm>
#include <cmath>

namespace regpoison {

void TrimConfig::validate() const {
  if (!(epsilon_hat >= 0.0 && epsilon_hat < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon_hat must lie in [0, 1)");
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "Trim needs at least one iteration");
  if (!(convergence_tol >= 0.0)) fail(ErrorCode::InvalidArgument, "convergence_tol must be >= 0");
}

std::vector<double> ITrimConfig::candidates() const {
  std::vector<double> out;
  for (std::size_t j = 0; j < runs; ++j) {
    out.push_back(epsilon_max * static_cast<double>(j) / static_cast<double>(runs - 1));
  }
  return out;
}

void ITrimConfig::validate() const {
  if (!(epsilon_max > 0.0 && epsilon_max < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon_max must lie in (0, 1)");
  if (runs < 2) fail(ErrorCode::InvalidArgument, "iTrim needs at least 2 runs");
  if (!(threshold > 0.0)) fail(ErrorCode::InvalidArgument, "threshold must be > 0");
  trim.validate();
}

std::string_view to_string(TrimStop stop) noexcept {
  switch (stop) {
    case TrimStop::SetUnchanged: return "set_unchanged";
    case TrimStop::LossPlateau: return "loss_plateau";
    case TrimStop::IterationBudget: return "iteration_budget";
  }
  return "set_unchanged";
}

std::size_t retained_count(std::size_t rows, double epsilon_hat) {
  return floor_count(static_cast<double>(rows) / (1.0 + epsilon_hat));
}

namespace {

/// Indices of the k smallest squared residuals, ties to the lower index, sorted.
std::vector<std::size_t> smallest_residuals(const Eigen::VectorXd& squared, std::size_t k) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(squared.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto less = [&](std::size_t a, std::size_t b) {
    const double ra = squared[static_cast<Eigen::Index>(a)];
    const double rb = squared[static_cast<Eigen::Index>(b)];
    return ra < rb || (ra == rb && a < b);
  };
  if (k < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), less);
    idx.resize(k);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

DefenseResult trim(const Dataset& poisoned, const RegressorSpec& spec, const TrimConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t n = poisoned.rows();
  const std::size_t k = retained_count(n, config.epsilon_hat);
  if (k < 2) fail(ErrorCode::TooFewRetained, "Trim would retain " + std::to_string(k) + " rows");

  auto retained = seeded_permutation(n, seed);
  retained.resize(k);
  std::sort(retained.begin(), retained.end());

  DefenseResult out;
  out.final_model = fit(spec, poisoned.subset(retained));
  out.iteration_losses.push_back(out.final_model.training_loss);
  out.stop_reason = TrimStop::IterationBudget;

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    const Eigen::VectorXd residual = predict(out.final_model, poisoned.features) - poisoned.targets;
    auto selected = smallest_residuals(residual.array().square().matrix(), k);
    if (selected == retained) {
      out.stop_reason = TrimStop::SetUnchanged;
      break;
    }
    retained = std::move(selected);
    out.final_model = fit(spec, poisoned.subset(retained));
    out.iterations = iter;
    const double previous = out.iteration_losses.back();
    out.iteration_losses.push_back(out.final_model.training_loss);
    if (previous - out.final_model.training_loss < config.convergence_tol) {
      out.stop_reason = TrimStop::LossPlateau;
      break;
    }
  }

  out.retained_indices = std::move(retained);
  out.estimated_epsilon = config.epsilon_hat;
  out.loss_trace.push_back({config.epsilon_hat, out.final_model.training_loss, k, std::nullopt});
  return out;
}

DefenseResult itrim(const Dataset& poisoned, const RegressorSpec& spec, const ITrimConfig& config,
                    std::uint64_t seed) {
  config.validate();
  const auto candidates = config.candidates();

  std::vector<LossTraceEntry> trace;
  std::optional<std::size_t> chosen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    TrimConfig tc = config.trim;
    tc.epsilon_hat = candidates[i];
    auto run = trim(poisoned, spec, tc, derive_seed(seed, {i}));
    trace.push_back({candidates[i], run.final_model.training_loss, run.retained_indices.size(),
                     std::move(run.final_model)});
    if (!chosen && i >= 1 && std::abs(trace[i].train_loss - trace[i - 1].train_loss) < config.threshold) {
      chosen = i;
      if (!config.full_trace) break;
    }
  }

  const double epsilon_opt = chosen ? candidates[*chosen] : config.epsilon_max;
  TrimConfig final_config = config.trim;
  final_config.epsilon_hat = epsilon_opt;
  DefenseResult out = trim(poisoned, spec, final_config, seed);
  out.loss_trace = std::move(trace);
  out.estimated_epsilon = epsilon_opt;
  out.no_kink_found = !chosen;
  return out;
}

}  // namespace regpoison
