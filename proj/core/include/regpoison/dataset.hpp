#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace regpoison {

/// Data as read from disk, in original units.
struct RawDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  std::string name;
  /// d feature names followed by the target name.
  std::vector<std::string> column_names;
  /// Rows rejected at ingestion (unparseable or non-finite cells).
  std::size_t dropped_rows = 0;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(targets.size()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

/// Per-column min/max over d feature columns plus the target (last entry).
struct ScalingParams {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  std::size_t columns() const noexcept { return static_cast<std::size_t>(min.size()); }
  std::size_t feature_count() const noexcept { return columns() == 0 ? 0 : columns() - 1; }
  bool is_constant(std::size_t column) const { return min[column] == max[column]; }
  bool target_constant() const { return is_constant(columns() - 1); }
};

/// Features and targets mapped into [0, 1]. Plays every role in the
/// pipeline: substitute set, clean train, poisoned train, test set.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  std::shared_ptr<const ScalingParams> scaling;
  std::vector<std::string> column_names;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(targets.size()); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Rows at `indices`, in that order; shares the scaling params.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Builds a Dataset from matrices already in scaled units (no scaling attached).
Dataset make_dataset(Eigen::MatrixXd features, Eigen::VectorXd targets);

struct DataSplits {
  Dataset substitute;
  Dataset train;
  Dataset test;
  std::vector<std::size_t> substitute_indices;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
};

/// Interval of target values an attacker may emit without raising suspicion.
struct FeasibilityDomain {
  double gamma_min = 0.0;
  double gamma_max = 1.0;

  double midpoint() const noexcept { return 0.5 * (gamma_min + gamma_max); }
  /// Throws DegenerateDomain unless gamma_min < gamma_max (both finite).
  void validate() const;
};

/// Attacker-produced rows. `source_indices` records which substitute row each
/// poison row was derived from (empty for attacks that synthesize features).
struct PoisonSet {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  std::vector<std::size_t> source_indices;

  std::size_t size() const noexcept { return static_cast<std::size_t>(targets.size()); }
};

/// A poisoned training set together with its provenance mask. The mask is
/// for evaluation columns only; defenses are handed `data` alone.
struct PoisonedTrain {
  Dataset data;
  std::vector<bool> is_poison;

  std::size_t poison_count() const;
};

ScalingParams fit_scaler(const RawDataset& raw);

/// (x - min) / (max - min) clamped to [0, 1]; constant columns map to 0.
Dataset apply_scaler(const RawDataset& raw, std::shared_ptr<const ScalingParams> params);

double invert_target(const ScalingParams& params, double scaled);
Eigen::VectorXd invert_targets(const ScalingParams& params, const Eigen::VectorXd& scaled);

/// Shuffles row indices with `seed`, then cuts floor(0.25 n) substitute rows,
/// floor(0.6 n) train rows, and the remainder as test rows.
DataSplits split(const Dataset& data, std::uint64_t seed);

/// Uniform random `cap`-subset of rows (kept in original order); identity when n <= cap.
RawDataset subsample(const RawDataset& raw, std::size_t cap, std::uint64_t seed);

PoisonedTrain append_and_shuffle(const Dataset& train, const PoisonSet& poison, std::uint64_t seed);

}  // namespace regpoison
