#include "regpoison/synthetic.hpp"

#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include <cmath>
#include <numbers>

namespace regpoison {

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::Linear: return "linear";
    case SyntheticKind::Piecewise: return "piecewise";
    case SyntheticKind::Friedman: return "friedman";
  }
  return "linear";
}

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "linear") return SyntheticKind::Linear;
  if (name == "piecewise") return SyntheticKind::Piecewise;
  if (name == "friedman") return SyntheticKind::Friedman;
  fail(ErrorCode::InvalidArgument, "unknown synthetic kind '" + name + "'");
}

std::string SyntheticSpec::name() const {
  return "synthetic_" + to_string(kind) + "_d" + std::to_string(dims);
}

namespace {

/// Features with a mild AR(1) correlation between neighbouring columns.
Eigen::MatrixXd correlated_gaussian(std::size_t n, std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double rho = 0.3;
  const double innov = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double prev = normal(rng);
    x(i, 0) = prev;
    for (Eigen::Index j = 1; j < x.cols(); ++j) {
      prev = rho * prev + innov * normal(rng);
      x(i, j) = prev;
    }
  }
  return x;
}

}  // namespace

RawDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.rows < 1 || spec.dims < 1) fail(ErrorCode::InvalidArgument, "synthetic data needs n >= 1 and d >= 1");
  if (spec.kind == SyntheticKind::Friedman && spec.dims < 5) {
    fail(ErrorCode::InvalidArgument, "friedman data needs at least 5 features");
  }
  Rng rng(spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.rows);
  const auto d = static_cast<Eigen::Index>(spec.dims);
  Eigen::MatrixXd x = correlated_gaussian(spec.rows, spec.dims, rng);

  std::uniform_real_distribution<double> coef(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  Eigen::VectorXd signal(n);
  switch (spec.kind) {
    case SyntheticKind::Linear: {
      Eigen::VectorXd beta(d);
      for (Eigen::Index j = 0; j < d; ++j) beta[j] = (sign(rng) ? 1.0 : -1.0) * coef(rng);
      signal = x * beta;
      break;
    }
    case SyntheticKind::Piecewise: {
      std::uniform_real_distribution<double> knot(-0.75, 0.75);
      signal.setZero();
      for (Eigen::Index j = 0; j < d; ++j) {
        const double k = knot(rng);
        const double left = (sign(rng) ? 1.0 : -1.0) * coef(rng);
        const double right = left + (sign(rng) ? 1.0 : -1.0) * coef(rng);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double u = x(i, j) - k;
          signal[i] += u < 0.0 ? left * u : right * u;
        }
      }
      break;
    }
    case SyntheticKind::Friedman: {
      constexpr double pi = std::numbers::pi;
      for (Eigen::Index i = 0; i < n; ++i) {
        // Friedman #1 evaluated on features mapped around the unit interval.
        const auto u = [&](Eigen::Index j) { return 0.5 + 0.2 * x(i, j); };
        signal[i] = 10.0 * std::sin(pi * u(0) * u(1)) + 20.0 * (u(2) - 0.5) * (u(2) - 0.5) + 10.0 * u(3) +
                    5.0 * u(4);
      }
      break;
    }
  }

  const double mean = signal.mean();
  const double sd = std::sqrt((signal.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
  std::normal_distribution<double> normal(0.0, spec.noise * (sd > 0.0 ? sd : 1.0));

  RawDataset raw;
  raw.name = spec.name();
  raw.features = std::move(x);
  raw.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) raw.targets[i] = signal[i] + normal(rng);
  for (Eigen::Index j = 0; j < d; ++j) raw.column_names.push_back("x" + std::to_string(j));
  raw.column_names.emplace_back("y");
  return raw;
}

std::vector<SyntheticSpec> synthetic_suite(std::uint64_t seed, std::size_t rows) {
  const std::vector<std::pair<SyntheticKind, std::size_t>> layout = {
      {SyntheticKind::Linear, 5},    {SyntheticKind::Linear, 20},   {SyntheticKind::Piecewise, 5},
      {SyntheticKind::Friedman, 5},  {SyntheticKind::Friedman, 20},
  };
  std::vector<SyntheticSpec> suite;
  std::uint64_t index = 0;
  for (const auto& [kind, dims] : layout) {
    SyntheticSpec spec;
    spec.kind = kind;
    spec.dims = dims;
    spec.rows = rows;
    spec.seed = derive_seed(seed, {index++});
    suite.push_back(spec);
  }
  return suite;
}

}  // namespace regpoison
