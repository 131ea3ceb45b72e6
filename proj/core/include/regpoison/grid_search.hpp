#pragma once

#include "regpoison/dataset.hpp"
#include "regpoison/regressor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace regpoison {

using HyperPoint = std::map<std::string, double>;

struct HyperGrid {
  std::map<std::string, std::vector<double>> candidates;
  std::size_t folds = 3;

  /// Cartesian product in canonical order: keys sorted by name, each
  /// candidate list sorted ascending and de-duplicated, last key varying
  /// fastest. Grid indices (and the tie-break) refer to this order, so the
  /// order in which candidates were listed never matters.
  std::vector<HyperPoint> points() const;
  void validate() const;
};

HyperGrid default_grid(RegressorKind kind);

struct GridSearchResult {
  RegressorSpec best;
  std::size_t best_index = 0;
  std::vector<HyperPoint> points;
  /// Mean validation MSE per grid point; +inf where every fold failed to fit.
  std::vector<double> mean_validation_mse;
};

/// k-fold cross-validated search. Hyperparameters absent from the grid
/// keep the values in `base`; `base.seed` seeds the fitted models.
GridSearchResult grid_search_detailed(const RegressorSpec& base, const HyperGrid& grid, const Dataset& data,
                                      std::uint64_t seed);

RegressorSpec grid_search(RegressorKind kind, const HyperGrid& grid, const Dataset& data, std::uint64_t seed);

}  // namespace regpoison
