#include "regpoison/defenses.hpp"
#include "regpoison/error.hpp"
#include "regpoison/random.hpp"

#include "oracles/subset_search.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace regpoison;

namespace {

RegressorSpec ols() {
  RegressorSpec s = default_spec(RegressorKind::Ridge);
  s.hyperparams["alpha"] = 1e-10;
  return s;
}

Dataset exact_line(std::size_t n) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = 0.2 + 0.5 * x(i, 0);
  }
  return make_dataset(x, y);
}

// Clean linear rows followed by `poison` rows whose targets sit at the far
// end of [0, 1] from the line.
Dataset line_with_poison(std::size_t clean, std::size_t poison, double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, noise);
  const auto n = static_cast<Eigen::Index>(clean + poison);
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = u(rng);
    const double signal = 0.2 + 0.2 * x(i, 0) + 0.1 * x(i, 1) + 0.15 * x(i, 2);
    y[i] = i < static_cast<Eigen::Index>(clean) ? signal + g(rng) : (signal > 0.5 ? 0.0 : 1.0);
  }
  return make_dataset(x, y);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

TrimConfig trim_at(double epsilon_hat) {
  TrimConfig c;
  c.epsilon_hat = epsilon_hat;
  return c;
}

ITrimConfig aligned_grid() {
  ITrimConfig c;
  c.epsilon_max = 0.10;
  c.runs = 6;
  return c;
}

}  // namespace

TEST(RetainedCount, FloorOfRatio) {
  EXPECT_EQ(retained_count(10, 0.0), 10u);
  EXPECT_EQ(retained_count(11, 0.1), 10u);
  EXPECT_EQ(retained_count(520, 0.04), 500u);
  EXPECT_EQ(retained_count(1248, 0.04), 1200u);
  EXPECT_EQ(retained_count(100, 0.14), 87u);
}

TEST(Trim, CleanLineKeepsEverything) {
  const auto data = exact_line(10);
  const auto r = trim(data, ols(), trim_at(0.0), 3);
  EXPECT_EQ(r.retained_indices.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(r.retained_indices[i], i);
  EXPECT_LT(r.final_model.training_loss, 1e-20);
}

TEST(Trim, OutlierMatchesExhaustiveSubsetSearch) {
  auto data = exact_line(10);
  data.features.conservativeResize(11, 1);
  data.targets.conservativeResize(11);
  data.features(10, 0) = 0.5;
  data.targets[10] = 5.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = trim(data, ols(), trim_at(0.1), seed);
    const auto best = oracle::best_subset(data, ols(), 10);
    EXPECT_EQ(r.retained_indices, best.indices) << "seed " << seed;
    EXPECT_EQ(std::count(r.retained_indices.begin(), r.retained_indices.end(), 10u), 0);
    EXPECT_NEAR(std::get<LinearParams>(r.final_model.params).weights[0], 0.5, 1e-6);
  }
}

TEST(Trim, LossNonIncreasingAndCountExact) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto data = line_with_poison(300, 30, 0.05, seed);
    TrimConfig c = trim_at(0.1);
    c.convergence_tol = 0.0;
    c.max_iterations = 50;
    const auto r = trim(data, ols(), c, seed);
    EXPECT_EQ(r.retained_indices.size(), retained_count(330, 0.1));
    ASSERT_GE(r.iteration_losses.size(), 1u);
    for (std::size_t i = 1; i < r.iteration_losses.size(); ++i) {
      EXPECT_LE(r.iteration_losses[i], r.iteration_losses[i - 1] + 1e-12) << "seed " << seed << " iter " << i;
    }
    EXPECT_TRUE(std::is_sorted(r.retained_indices.begin(), r.retained_indices.end()));
  }
}

TEST(Trim, FinalRankingConsistent) {
  const auto data = line_with_poison(200, 12, 0.03, 4);
  TrimConfig c = trim_at(0.06);
  c.convergence_tol = 0.0;
  c.max_iterations = 100;
  const auto r = trim(data, ols(), c, 1);
  ASSERT_EQ(r.stop_reason, TrimStop::SetUnchanged);
  const Eigen::VectorXd sq = (predict(r.final_model, data.features) - data.targets).array().square();
  std::vector<bool> kept(data.rows(), false);
  for (const auto i : r.retained_indices) kept[i] = true;
  double worst_kept = 0.0;
  double best_dropped = 1e300;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double v = sq[static_cast<Eigen::Index>(i)];
    if (kept[i]) {
      worst_kept = std::max(worst_kept, v);
    } else {
      best_dropped = std::min(best_dropped, v);
    }
  }
  EXPECT_LE(worst_kept, best_dropped);
  for (std::size_t i = 200; i < data.rows(); ++i) EXPECT_FALSE(kept[i]) << "poison row " << i << " kept";
}

TEST(Trim, DeterministicUnderSeed) {
  const auto data = line_with_poison(150, 10, 0.05, 2);
  const auto a = trim(data, ols(), trim_at(0.14), 77);
  const auto b = trim(data, ols(), trim_at(0.14), 77);
  EXPECT_EQ(a.retained_indices, b.retained_indices);
  EXPECT_EQ(a.iteration_losses, b.iteration_losses);
}

TEST(Trim, Errors) {
  EXPECT_EQ(code_of([] { trim(exact_line(2), ols(), trim_at(0.5), 0); }), ErrorCode::TooFewRetained);
  EXPECT_EQ(code_of([] { trim(exact_line(10), ols(), trim_at(1.0), 0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] {
              TrimConfig c;
              c.max_iterations = 0;
              trim(exact_line(10), ols(), c, 0);
            }),
            ErrorCode::InvalidArgument);
}

TEST(ITrim, CandidateGrid) {
  const auto grid = aligned_grid().candidates();
  ASSERT_EQ(grid.size(), 6u);
  for (std::size_t j = 0; j < grid.size(); ++j) EXPECT_NEAR(grid[j], 0.02 * static_cast<double>(j), 1e-15);
}

TEST(ITrim, SelectsRightEndOfFirstFlatStep) {
  // Poison at 4%: the loss collapses between 0.02 and 0.04 and is flat from
  // 0.04 to 0.06, so the first comparable pair ends at 0.06.
  const auto data = line_with_poison(500, 20, 0.01, 9);
  auto c = aligned_grid();
  c.full_trace = true;
  const auto r = itrim(data, ols(), c, 5);
  EXPECT_NEAR(r.estimated_epsilon, 0.06, 1e-15);
  EXPECT_FALSE(r.no_kink_found);
  ASSERT_EQ(r.loss_trace.size(), 6u);
  const double before = std::abs(r.loss_trace[2].train_loss - r.loss_trace[1].train_loss);
  const double after = std::abs(r.loss_trace[3].train_loss - r.loss_trace[2].train_loss);
  EXPECT_GE(before / after, 10.0);
  for (std::size_t i = 500; i < data.rows(); ++i) {
    EXPECT_FALSE(std::binary_search(r.retained_indices.begin(), r.retained_indices.end(), i));
  }
}

TEST(ITrim, MatchesTrimAtTheChosenCandidate) {
  const auto data = line_with_poison(300, 9, 0.02, 3);
  const auto r = itrim(data, ols(), aligned_grid(), 11);
  const auto direct = trim(data, ols(), trim_at(r.estimated_epsilon), 11);
  EXPECT_EQ(r.retained_indices, direct.retained_indices);
  EXPECT_EQ(r.final_model.training_loss, direct.final_model.training_loss);
}

TEST(ITrim, RetainedCountsShrinkAlongTheGrid) {
  const auto data = line_with_poison(300, 9, 0.02, 3);
  auto c = aligned_grid();
  c.full_trace = true;
  const auto r = itrim(data, ols(), c, 1);
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) {
    EXPECT_LE(r.loss_trace[i].retained, r.loss_trace[i - 1].retained);
    EXPECT_LE(r.loss_trace[i].train_loss, r.loss_trace[i - 1].train_loss + 1e-12);
  }
}

TEST(ITrim, CleanDataStopsAtFirstComparableCandidate) {
  const auto data = line_with_poison(400, 0, 0.02, 6);
  ITrimConfig c;
  const auto r = itrim(data, ols(), c, 2);
  EXPECT_NEAR(r.estimated_epsilon, c.epsilon_max / static_cast<double>(c.runs - 1), 1e-15);
  EXPECT_EQ(r.loss_trace.size(), 2u);
  EXPECT_FALSE(r.no_kink_found);
}

TEST(ITrim, NoKinkFallsBackToMaximum) {
  const auto data = line_with_poison(300, 9, 0.02, 3);
  auto c = aligned_grid();
  c.threshold = 1e-300;
  const auto r = itrim(data, ols(), c, 1);
  EXPECT_TRUE(r.no_kink_found);
  EXPECT_DOUBLE_EQ(r.estimated_epsilon, 0.10);
  EXPECT_EQ(r.loss_trace.size(), 6u);
}

TEST(ITrim, DeterministicAndValidated) {
  const auto data = line_with_poison(200, 8, 0.02, 1);
  const auto a = itrim(data, ols(), ITrimConfig{}, 4);
  const auto b = itrim(data, ols(), ITrimConfig{}, 4);
  EXPECT_EQ(a.retained_indices, b.retained_indices);
  EXPECT_EQ(a.estimated_epsilon, b.estimated_epsilon);
  EXPECT_EQ(code_of([&] {
              ITrimConfig c;
              c.runs = 1;
              itrim(data, ols(), c, 0);
            }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] {
              ITrimConfig c;
              c.threshold = 0.0;
              itrim(data, ols(), c, 0);
            }),
            ErrorCode::InvalidArgument);
}
