#pragma once

#include "regpoison/dataset.hpp"
#include "regpoison/regressor.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace regpoison {

struct TrimConfig {
  double epsilon_hat = 0.14;
  std::size_t max_iterations = 20;
  double convergence_tol = 1e-9;

  void validate() const;
};

struct ITrimConfig {
  double epsilon_max = 0.14;
  std::size_t runs = 6;
  double threshold = 1e-3;
  /// Iteration budget and tolerance reused for every candidate Trim run.
  TrimConfig trim;
  /// Evaluate every candidate even after the kink is found (for loss curves).
  bool full_trace = false;

  /// epsilon_max * j / (runs - 1) for j = 0 .. runs - 1.
  std::vector<double> candidates() const;
  void validate() const;
};

enum class TrimStop { SetUnchanged, LossPlateau, IterationBudget };

std::string_view to_string(TrimStop stop) noexcept;

struct LossTraceEntry {
  double epsilon_hat = 0.0;
  /// Unregularized train MSE of the refit model on its retained rows.
  double train_loss = 0.0;
  std::size_t retained = 0;
  /// Refit model for this candidate (iTrim keeps them for test-loss audits).
  std::optional<FittedModel> model;
};

struct DefenseResult {
  /// Sorted row indices into the poisoned dataset that the defense keeps.
  std::vector<std::size_t> retained_indices;
  double estimated_epsilon = 0.0;
  std::vector<LossTraceEntry> loss_trace;
  FittedModel final_model;

  /// iTrim only: no candidate met the threshold, so epsilon_max was used.
  bool no_kink_found = false;
  /// Trim bookkeeping for the run that produced `retained_indices`.
  std::size_t iterations = 0;
  TrimStop stop_reason = TrimStop::SetUnchanged;
  /// Retained-set loss after every refit, starting with the random initial subset.
  std::vector<double> iteration_losses;
};

/// floor(N / (1 + epsilon_hat)).
std::size_t retained_count(std::size_t rows, double epsilon_hat);

/// Alternating trimmed least squares: fit on a seeded random k-subset,
/// re-select the k rows with the smallest squared residuals (lowest index
/// wins ties), refit, and repeat until the retained set stops changing,
/// the loss improves by less than `convergence_tol`, or the iteration
/// budget is spent.
DefenseResult trim(const Dataset& poisoned, const RegressorSpec& spec, const TrimConfig& config, std::uint64_t seed);

/// Runs Trim over the candidate grid in ascending order and picks the first
/// candidate (index >= 1) whose train loss differs from its predecessor's by
/// less than the threshold, then reruns Trim there with `seed`. Candidate i
/// uses a seed derived from (seed, i).
DefenseResult itrim(const Dataset& poisoned, const RegressorSpec& spec, const ITrimConfig& config,
                    std::uint64_t seed);

}  // namespace regpoison
