#pragma once

#include "regpoison/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace regpoison {

/// Attacker budget: ceil(epsilon * target_n) rows against a victim train
/// set of size target_n.
struct AttackConfig {
  double epsilon = 0.02;
  std::size_t target_n = 1;
  FeasibilityDomain domain;
  std::uint64_t seed = 0;

  std::size_t poison_count() const;
  void validate() const;
};

/// Black-box prediction oracle: features in, predictions out.
using ModelQuery = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Picks the substitute rows whose targets sit closest to an end of the
/// feasibility domain and moves each target to the opposite end. Features
/// are copied unchanged. No model is consulted.
PoisonSet flip_attack(const Dataset& substitute, const AttackConfig& config);

/// Samples feature rows from a Gaussian fit to the substitute features,
/// rounds them to the nearest corner of [0, 1]^d, queries `model_query`
/// and assigns each row the target end opposite the prediction.
PoisonSet statp_attack(const Dataset& substitute, const AttackConfig& config, const ModelQuery& model_query);

/// `count` draws from N(mean, covariance + lambda I), lambda = 1e-9 trace / d
/// (1e-9 when the trace is zero).
Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, std::size_t count,
                                std::uint64_t seed);

}  // namespace regpoison
