#include <benchmark/benchmark.h>

#include "sparsetune/recommended.hpp"
#include "sparsetune/solvers.hpp"
#include "sparsetune/suites.hpp"
#include "sparsetune/transition.hpp"

using namespace sparsetune;

namespace {

Vector random_vector(Index len, Seed seed) {
  Rng rng(seed);
  Vector v(len);
  for (Index i = 0; i < len; ++i) v[i] = rng.normal();
  return v;
}

void forward(benchmark::State& state, MatrixEnsemble e) {
  const Index N = state.range(0);
  const auto op = sample_operator(e, N / 2, N, 1);
  const Vector x = random_vector(N, 2);
  for (auto _ : state) benchmark::DoNotOptimize(apply_forward(op, x));
  state.SetComplexityN(N);
}

void adjoint(benchmark::State& state, MatrixEnsemble e) {
  const Index N = state.range(0);
  const auto op = sample_operator(e, N / 2, N, 1);
  const Vector r = random_vector(op.measurement_size(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(apply_adjoint(op, r));
  state.SetComplexityN(N);
}

void solve_recommended(benchmark::State& state, Algorithm algo, MatrixEnsemble e) {
  const Index N = state.range(0);
  const Index n = N / 2;
  const bool fast = is_fast(e);
  const auto inst = generate_instance({e, CoefficientEnsemble::CARS}, n, N, ceil_ratio(0.2, n), 7);
  SolverConfig cfg = recommended_config(algo, 0.5, fast);
  cfg.residual_stop = kTimingResidualStop;
  int iterations = 0;
  for (auto _ : state) {
    const auto res = solve(inst.op, inst.y, cfg);
    iterations = res.iterations;
    benchmark::DoNotOptimize(res.xhat.data());
  }
  state.counters["iterations"] = iterations;
}

}  // namespace

BENCHMARK_CAPTURE(forward, USE, MatrixEnsemble::USE)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK_CAPTURE(forward, Fourier, MatrixEnsemble::PartialFourier1D)->RangeMultiplier(4)->Range(256, 1 << 16);
BENCHMARK_CAPTURE(forward, Hadamard, MatrixEnsemble::PartialHadamard1D)->RangeMultiplier(4)->Range(256, 1 << 16);
BENCHMARK_CAPTURE(adjoint, USE, MatrixEnsemble::USE)->RangeMultiplier(4)->Range(256, 4096);
BENCHMARK_CAPTURE(adjoint, Fourier, MatrixEnsemble::PartialFourier1D)->RangeMultiplier(4)->Range(256, 1 << 16);

BENCHMARK_CAPTURE(solve_recommended, IST_USE, Algorithm::IST, MatrixEnsemble::USE)->Arg(400)->Arg(1600);
BENCHMARK_CAPTURE(solve_recommended, IHT_USE, Algorithm::IHT, MatrixEnsemble::USE)->Arg(400)->Arg(1600);
BENCHMARK_CAPTURE(solve_recommended, TST_USE, Algorithm::TST, MatrixEnsemble::USE)->Arg(400)->Arg(1600);
BENCHMARK_CAPTURE(solve_recommended, TST_Fourier, Algorithm::TST, MatrixEnsemble::PartialFourier1D)
    ->Arg(1 << 12)
    ->Arg(1 << 14);

BENCHMARK_MAIN();
