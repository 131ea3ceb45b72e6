#include "regpoison/attacks.hpp"
#include "regpoison/defenses.hpp"
#include "regpoison/grid_search.hpp"
#include "regpoison/regressor.hpp"
#include "regpoison/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace regpoison;

namespace {

Dataset problem(std::size_t rows, std::size_t dims) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::Friedman;
  spec.rows = rows;
  spec.dims = dims;
  const auto raw = make_synthetic(spec);
  return apply_scaler(raw, std::make_shared<const ScalingParams>(fit_scaler(raw)));
}

void fit_kind(benchmark::State& state, RegressorKind kind) {
  const auto data = problem(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = default_spec(kind);
  for (auto _ : state) benchmark::DoNotOptimize(fit(spec, data));
  state.SetComplexityN(state.range(0));
}

void BM_FitRidge(benchmark::State& s) { fit_kind(s, RegressorKind::Ridge); }
void BM_FitLasso(benchmark::State& s) { fit_kind(s, RegressorKind::Lasso); }
void BM_FitHuber(benchmark::State& s) { fit_kind(s, RegressorKind::Huber); }
void BM_FitKernelRidge(benchmark::State& s) { fit_kind(s, RegressorKind::KernelRidge); }
void BM_FitSvr(benchmark::State& s) { fit_kind(s, RegressorKind::SVR); }
void BM_FitMlp(benchmark::State& s) { fit_kind(s, RegressorKind::MLP); }

BENCHMARK(BM_FitRidge)->Arg(300)->Arg(1200)->Arg(4800);
BENCHMARK(BM_FitLasso)->Arg(300)->Arg(1200)->Arg(4800);
BENCHMARK(BM_FitHuber)->Arg(300)->Arg(1200)->Arg(4800);
BENCHMARK(BM_FitKernelRidge)->Arg(300)->Arg(1200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitSvr)->Arg(300)->Arg(1200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitMlp)->Arg(300)->Arg(1200)->Unit(benchmark::kMillisecond);

void BM_FlipAttack(benchmark::State& state) {
  const auto sub = problem(static_cast<std::size_t>(state.range(0)), 5);
  AttackConfig c;
  c.epsilon = 0.10;
  c.target_n = sub.rows();
  for (auto _ : state) benchmark::DoNotOptimize(flip_attack(sub, c));
}
BENCHMARK(BM_FlipAttack)->Arg(1000)->Arg(10000);

void BM_Trim(benchmark::State& state) {
  const auto data = problem(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = default_spec(RegressorKind::Ridge);
  for (auto _ : state) benchmark::DoNotOptimize(trim(data, spec, TrimConfig{}, 1));
}
BENCHMARK(BM_Trim)->Arg(1200)->Arg(4800);

void BM_ITrim(benchmark::State& state) {
  const auto data = problem(static_cast<std::size_t>(state.range(0)), 5);
  const auto spec = default_spec(RegressorKind::Ridge);
  for (auto _ : state) benchmark::DoNotOptimize(itrim(data, spec, ITrimConfig{}, 1));
}
BENCHMARK(BM_ITrim)->Arg(1200)->Unit(benchmark::kMillisecond);

void BM_GridSearchRidge(benchmark::State& state) {
  const auto data = problem(1200, 5);
  const auto grid = default_grid(RegressorKind::Ridge);
  for (auto _ : state) benchmark::DoNotOptimize(grid_search(RegressorKind::Ridge, grid, data, 3));
}
BENCHMARK(BM_GridSearchRidge)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
