#include "regpoison/attacks.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace regpoison {

std::size_t AttackConfig::poison_count() const { return ceil_count(epsilon, target_n); }

void AttackConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  if (target_n < 1) fail(ErrorCode::InvalidArgument, "target_n must be at least 1");
  if (poison_count() < 1) fail(ErrorCode::InvalidArgument, "attack budget rounds to zero rows");
  domain.validate();
}

PoisonSet flip_attack(const Dataset& substitute, const AttackConfig& config) {
  config.validate();
  const std::size_t m = substitute.rows();
  const std::size_t p = config.poison_count();
  if (m < p) {
    fail(ErrorCode::SubstituteTooSmall,
         "substitute has " + std::to_string(m) + " rows, attack needs " + std::to_string(p));
  }
  const auto& dom = config.domain;
  std::vector<double> delta(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double y = substitute.targets[static_cast<Eigen::Index>(i)];
    delta[i] = std::max(y - dom.gamma_min, dom.gamma_max - y);
  }
  // Largest delta first; equal deltas keep the lower substitute index.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return delta[a] > delta[b]; });
  order.resize(p);
  std::sort(order.begin(), order.end());

  PoisonSet out;
  out.features.resize(static_cast<Eigen::Index>(p), substitute.features.cols());
  out.targets.resize(static_cast<Eigen::Index>(p));
  out.source_indices = order;
  const double mid = dom.midpoint();
  for (std::size_t k = 0; k < p; ++k) {
    const auto src = static_cast<Eigen::Index>(order[k]);
    const auto row = static_cast<Eigen::Index>(k);
    out.features.row(row) = substitute.features.row(src);
    out.targets[row] = substitute.targets[src] > mid ? dom.gamma_min : dom.gamma_max;
  }
  return out;
}

Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, std::size_t count,
                                std::uint64_t seed) {
  const Eigen::Index d = mean.size();
  if (covariance.rows() != d || covariance.cols() != d) {
    fail(ErrorCode::DimensionMismatch, "covariance must be d x d");
  }
  if (count < 1) fail(ErrorCode::InvalidArgument, "sample count must be at least 1");
  const double asymmetry = d == 0 ? 0.0 : (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (!(asymmetry <= 1e-10 * std::max(1.0, covariance.cwiseAbs().maxCoeff()))) {
    fail(ErrorCode::InvalidArgument, "covariance must be symmetric");
  }
  const double trace = covariance.trace();
  const double loading = trace > 0.0 ? 1e-9 * trace / static_cast<double>(d) : 1e-9;
  Eigen::MatrixXd loaded = covariance;
  loaded.diagonal().array() += loading;
  Eigen::LLT<Eigen::MatrixXd> llt(loaded);
  if (llt.info() != Eigen::Success) fail(ErrorCode::NotPositiveDefinite, "covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(count), d);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(rng);
  }
  Eigen::MatrixXd samples = z * lower.transpose();
  samples.rowwise() += mean.transpose();
  return samples;
}

PoisonSet statp_attack(const Dataset& substitute, const AttackConfig& config, const ModelQuery& model_query) {
  config.validate();
  const std::size_t m = substitute.rows();
  if (m < 2) fail(ErrorCode::SubstituteTooSmall, "StatP needs at least 2 substitute rows");
  if (!model_query) fail(ErrorCode::OracleFailure, "no model oracle supplied");
  const std::size_t p = config.poison_count();

  const Eigen::VectorXd mean = substitute.features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = substitute.features.rowwise() - mean.transpose();
  Eigen::MatrixXd covariance = (centered.transpose() * centered) / static_cast<double>(m - 1);
  covariance = 0.5 * (covariance + covariance.transpose());

  PoisonSet out;
  out.features = sample_gaussian(mean, covariance, p, config.seed);
  out.features = (out.features.array() >= 0.5).cast<double>().matrix();

  Eigen::VectorXd predictions;
  try {
    predictions = model_query(out.features);
  } catch (const std::exception& e) {
    fail(ErrorCode::OracleFailure, std::string("model query failed: ") + e.what());
  }
  if (predictions.size() != static_cast<Eigen::Index>(p) || !predictions.allFinite()) {
    fail(ErrorCode::OracleFailure, "model query returned an invalid prediction vector");
  }
  const auto& dom = config.domain;
  out.targets.resize(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < out.targets.size(); ++i) {
    out.targets[i] = predictions[i] <= dom.midpoint() ? dom.gamma_max : dom.gamma_min;
  }
  return out;
}

}  // namespace regpoison
