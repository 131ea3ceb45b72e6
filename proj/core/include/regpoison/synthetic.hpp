#pragma once

#include "regpoison/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace regpoison {

enum class SyntheticKind { Linear, Piecewise, Friedman };

std::string to_string(SyntheticKind kind);
SyntheticKind synthetic_kind_from_string(const std::string& name);

/// Regression problems with correlated Gaussian features (so extreme feature
/// corners are sparsely populated, as in most tabular corpora).
///   Linear     y = x'b + noise
///   Piecewise  sum of hinge functions of the features + noise
///   Friedman   Friedman #1 on the first five features, remaining features are nuisance
/// `noise` is the noise standard deviation relative to the signal's.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Linear;
  std::size_t rows = 2000;
  std::size_t dims = 5;
  double noise = 0.25;
  std::uint64_t seed = 1;

  std::string name() const;
};

RawDataset make_synthetic(const SyntheticSpec& spec);

/// Five-problem desk-scale suite: linear (d=5, d=20), piecewise (d=5),
/// Friedman (d=5, d=20), n=2000 each.
std::vector<SyntheticSpec> synthetic_suite(std::uint64_t seed, std::size_t rows = 2000);

}  // namespace regpoison
