#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "properhyp/solver.hpp"
#include "properhyp/symmetrizer.hpp"

using namespace properhyp;

namespace {

std::vector<double> random_coeffs(int m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> roots(static_cast<std::size_t>(m));
  for (double& r : roots) r = u(rng);
  return poly_from_roots(roots);
}

Problem wave() {
  Problem p;
  p.m = 2;
  p.a = {parse_expr("0"), parse_expr("-1")};
  p.phi = {parse_expr("(1 - x^2/4)^4"), parse_expr("-2*x*(1 - x^2/4)^3")};
  p.r = Problem::zero_lower_order(2);
  p.x_lo = -3;
  p.x_hi = 3;
  p.rho0 = 2;
  p.T = 1;
  return p;
}

void BM_RootsOf(benchmark::State& state) {
  const auto c = random_coeffs(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(roots_of(c));
}
BENCHMARK(BM_RootsOf)->DenseRange(2, 5);

void BM_RootsAt(benchmark::State& state) {
  HPoly p({parse_expr("0"), parse_expr("-(1 + x^2)"), parse_expr("0"), parse_expr("x^2")});
  double x = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(roots_at(p, x));
}
BENCHMARK(BM_RootsAt);

void BM_JannelliQ(benchmark::State& state) {
  const auto p = roots_of(random_coeffs(static_cast<int>(state.range(0)), 11));
  for (auto _ : state) benchmark::DoNotOptimize(jannelli_q(p));
}
BENCHMARK(BM_JannelliQ)->DenseRange(2, 5);

void BM_SolveWave(benchmark::State& state) {
  const Problem p = wave();
  const Grid g = make_grid(p, {.dx = 1.0 / static_cast<double>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, g));
}
BENCHMARK(BM_SolveWave)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
