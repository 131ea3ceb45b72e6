#include "regpoison/dataset.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include <algorithm>
#include <cmath>

namespace regpoison {

namespace {

double scale_value(double x, double lo, double hi) {
  if (lo == hi) return 0.0;
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.targets.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(src);
    out.targets[static_cast<Eigen::Index>(i)] = targets[src];
  }
  out.scaling = scaling;
  out.column_names = column_names;
  return out;
}

Dataset make_dataset(Eigen::MatrixXd features, Eigen::VectorXd targets) {
  if (features.rows() != targets.size()) {
    fail(ErrorCode::DimensionMismatch, "feature rows and target length differ");
  }
  Dataset out;
  out.features = std::move(features);
  out.targets = std::move(targets);
  for (Eigen::Index j = 0; j < out.features.cols(); ++j) {
    out.column_names.push_back("x" + std::to_string(j));
  }
  out.column_names.emplace_back("y");
  return out;
}

void FeasibilityDomain::validate() const {
  if (!std::isfinite(gamma_min) || !std::isfinite(gamma_max) || !(gamma_min < gamma_max)) {
    fail(ErrorCode::DegenerateDomain, "feasibility domain requires gamma_min < gamma_max");
  }
}

std::size_t PoisonedTrain::poison_count() const {
  return static_cast<std::size_t>(std::count(is_poison.begin(), is_poison.end(), true));
}

ScalingParams fit_scaler(const RawDataset& raw) {
  if (raw.rows() == 0) fail(ErrorCode::EmptyInput, "cannot fit a scaler on an empty dataset");
  const Eigen::Index d = raw.features.cols();
  ScalingParams params;
  params.min.resize(d + 1);
  params.max.resize(d + 1);
  for (Eigen::Index j = 0; j < d; ++j) {
    params.min[j] = raw.features.col(j).minCoeff();
    params.max[j] = raw.features.col(j).maxCoeff();
  }
  params.min[d] = raw.targets.minCoeff();
  params.max[d] = raw.targets.maxCoeff();
  return params;
}

Dataset apply_scaler(const RawDataset& raw, std::shared_ptr<const ScalingParams> params) {
  if (!params || params->columns() != raw.dims() + 1) {
    fail(ErrorCode::DimensionMismatch, "scaling params do not match the dataset column count");
  }
  const Eigen::Index n = raw.features.rows();
  const Eigen::Index d = raw.features.cols();
  Dataset out;
  out.features.resize(n, d);
  out.targets.resize(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.features(i, j) = scale_value(raw.features(i, j), params->min[j], params->max[j]);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.targets[i] = scale_value(raw.targets[i], params->min[d], params->max[d]);
  }
  out.column_names = raw.column_names;
  out.scaling = std::move(params);
  return out;
}

double invert_target(const ScalingParams& params, double scaled) {
  if (params.columns() == 0) fail(ErrorCode::DimensionMismatch, "empty scaling params");
  if (params.target_constant()) {
    fail(ErrorCode::ConstantTargetColumn, "target column is constant; scaling is not invertible");
  }
  const std::size_t t = params.columns() - 1;
  return scaled * (params.max[t] - params.min[t]) + params.min[t];
}

Eigen::VectorXd invert_targets(const ScalingParams& params, const Eigen::VectorXd& scaled) {
  Eigen::VectorXd out(scaled.size());
  for (Eigen::Index i = 0; i < scaled.size(); ++i) out[i] = invert_target(params, scaled[i]);
  return out;
}

DataSplits split(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.rows();
  if (n < 10) fail(ErrorCode::TooFewRows, "split needs at least 10 rows, got " + std::to_string(n));
  const auto perm = seeded_permutation(n, seed);
  const std::size_t n_sub = floor_count(0.25 * static_cast<double>(n));
  const std::size_t n_train = floor_count(0.75 * 0.8 * static_cast<double>(n));

  DataSplits out;
  out.seed = seed;
  out.substitute_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_sub));
  out.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_sub),
                           perm.begin() + static_cast<std::ptrdiff_t>(n_sub + n_train));
  out.test_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_sub + n_train), perm.end());
  out.substitute = data.subset(out.substitute_indices);
  out.train = data.subset(out.train_indices);
  out.test = data.subset(out.test_indices);
  return out;
}

RawDataset subsample(const RawDataset& raw, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) fail(ErrorCode::InvalidArgument, "subsample cap must be at least 1");
  if (raw.rows() <= cap) return raw;
  auto perm = seeded_permutation(raw.rows(), seed);
  perm.resize(cap);
  std::sort(perm.begin(), perm.end());

  RawDataset out;
  out.name = raw.name;
  out.column_names = raw.column_names;
  out.dropped_rows = raw.dropped_rows;
  out.features.resize(static_cast<Eigen::Index>(cap), raw.features.cols());
  out.targets.resize(static_cast<Eigen::Index>(cap));
  for (std::size_t i = 0; i < cap; ++i) {
    const auto src = static_cast<Eigen::Index>(perm[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = raw.features.row(src);
    out.targets[static_cast<Eigen::Index>(i)] = raw.targets[src];
  }
  return out;
}

PoisonedTrain append_and_shuffle(const Dataset& train, const PoisonSet& poison, std::uint64_t seed) {
  if (poison.size() > 0 && poison.features.cols() != train.features.cols()) {
    fail(ErrorCode::DimensionMismatch, "poison feature dimension differs from the train set");
  }
  if (poison.features.rows() != poison.targets.size()) {
    fail(ErrorCode::DimensionMismatch, "poison set rows and targets differ");
  }
  const std::size_t n = train.rows();
  const std::size_t total = n + poison.size();
  const auto perm = seeded_permutation(total, seed);

  PoisonedTrain out;
  out.data.features.resize(static_cast<Eigen::Index>(total), train.features.cols());
  out.data.targets.resize(static_cast<Eigen::Index>(total));
  out.data.scaling = train.scaling;
  out.data.column_names = train.column_names;
  out.is_poison.assign(total, false);
  for (std::size_t row = 0; row < total; ++row) {
    const std::size_t src = perm[row];
    const auto r = static_cast<Eigen::Index>(row);
    if (src < n) {
      out.data.features.row(r) = train.features.row(static_cast<Eigen::Index>(src));
      out.data.targets[r] = train.targets[static_cast<Eigen::Index>(src)];
    } else {
      const auto p = static_cast<Eigen::Index>(src - n);
      out.data.features.row(r) = poison.features.row(p);
      out.data.targets[r] = poison.targets[p];
      out.is_poison[row] = true;
    }
  }
  return out;
}

}  // namespace regpoison
