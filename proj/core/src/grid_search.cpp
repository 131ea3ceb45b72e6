#include "regpoison/grid_search.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace regpoison {

std::vector<HyperPoint> HyperGrid::points() const {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& [key, values] : candidates) {
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    axes.emplace_back(key, std::move(sorted));
  }
  std::vector<HyperPoint> out{HyperPoint{}};
  for (const auto& [key, values] : axes) {
    std::vector<HyperPoint> next;
    next.reserve(out.size() * values.size());
    for (const auto& partial : out) {
      for (double v : values) {
        auto p = partial;
        p[key] = v;
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

void HyperGrid::validate() const {
  if (folds < 2) fail(ErrorCode::InvalidArgument, "grid search needs at least 2 folds");
  for (const auto& [key, values] : candidates) {
    if (values.empty()) fail(ErrorCode::InvalidArgument, "empty candidate list for '" + key + "'");
    for (double v : values) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "non-finite candidate for '" + key + "'");
    }
  }
}

HyperGrid default_grid(RegressorKind kind) {
  const std::vector<double> alphas = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  const std::vector<double> gammas = {0.1, 1.0, 10.0};
  HyperGrid grid;
  switch (kind) {
    case RegressorKind::Ridge:
    case RegressorKind::Lasso: grid.candidates = {{"alpha", alphas}}; break;
    case RegressorKind::ElasticNet: grid.candidates = {{"alpha", alphas}, {"l1_ratio", {0.25, 0.5, 0.75}}}; break;
    case RegressorKind::Huber: grid.candidates = {{"alpha", alphas}, {"delta", {0.1, 1.0}}}; break;
    case RegressorKind::KernelRidge: grid.candidates = {{"alpha", alphas}, {"gamma", gammas}}; break;
    case RegressorKind::SVR: grid.candidates = {{"C", {0.1, 1.0, 10.0}}, {"gamma", gammas}, {"tube", {0.01}}}; break;
    case RegressorKind::MLP: grid.candidates = {{"alpha", alphas}, {"hidden", {16, 64}}}; break;
  }
  return grid;
}

GridSearchResult grid_search_detailed(const RegressorSpec& base, const HyperGrid& grid, const Dataset& data,
                                      std::uint64_t seed) {
  grid.validate();
  const std::size_t n = data.rows();
  const std::size_t k = grid.folds;
  if (n < k) fail(ErrorCode::TooFewRows, "grid search needs at least as many rows as folds");

  const auto perm = seeded_permutation(n, seed);
  std::vector<std::vector<std::size_t>> train_idx(k);
  std::vector<std::vector<std::size_t>> valid_idx(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t fold = i % k;
    for (std::size_t f = 0; f < k; ++f) (f == fold ? valid_idx[f] : train_idx[f]).push_back(perm[i]);
  }
  std::vector<Dataset> fold_train;
  std::vector<Dataset> fold_valid;
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(train_idx[f].begin(), train_idx[f].end());
    std::sort(valid_idx[f].begin(), valid_idx[f].end());
    fold_train.push_back(data.subset(train_idx[f]));
    fold_valid.push_back(data.subset(valid_idx[f]));
  }

  GridSearchResult result;
  result.points = grid.points();
  result.mean_validation_mse.assign(result.points.size(), std::numeric_limits<double>::infinity());
  for (std::size_t g = 0; g < result.points.size(); ++g) {
    RegressorSpec spec = base;
    for (const auto& [key, value] : result.points[g]) spec.hyperparams[key] = value;
    double total = 0.0;
    bool ok = true;
    for (std::size_t f = 0; f < k && ok; ++f) {
      try {
        const auto model = fit(spec, fold_train[f]);
        const double loss = train_loss(model, fold_valid[f]);
        ok = std::isfinite(loss);
        total += loss;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularSystem) throw;
        ok = false;
      }
    }
    if (ok) result.mean_validation_mse[g] = total / static_cast<double>(k);
  }

  const auto best = std::min_element(result.mean_validation_mse.begin(), result.mean_validation_mse.end());
  if (!std::isfinite(*best)) fail(ErrorCode::SingularSystem, "no grid point could be fit");
  result.best_index = static_cast<std::size_t>(best - result.mean_validation_mse.begin());
  result.best = base;
  for (const auto& [key, value] : result.points[result.best_index]) result.best.hyperparams[key] = value;
  return result;
}

RegressorSpec grid_search(RegressorKind kind, const HyperGrid& grid, const Dataset& data, std::uint64_t seed) {
  RegressorSpec base = default_spec(kind);
  base.seed = seed;
  return grid_search_detailed(base, grid, data, seed).best;
}

}  // namespace regpoison
