#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "sandkit/analysis.hpp"
#include "sandkit/directions.hpp"
#include "sandkit/geometry.hpp"

namespace {

using namespace sandkit;

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = n(rng);
  return Matrix(rows, cols, std::move(v));
}

// Per-column loops with no blocking; the reference the vectorized form replaces.
void naive(const Matrix& l, const Matrix& c, Vector& s1, Vector& s2) {
  const std::size_t d = l.rows(), k = l.cols(), nv = c.rows();
  s1.assign(d, 0.0);
  s2.assign(d, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) sq += l(i, j) * l(i, j);
    double sq2 = 0.0;
    for (std::size_t r = 0; r < nv; ++r) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += c(r, i) * l(i, j);
      sq2 += acc * acc;
    }
    const double n1 = std::sqrt(sq), n2 = std::sqrt(sq2);
    for (std::size_t i = 0; i < d; ++i) {
      s1[i] += l(i, j) / n1;
      s2[i] += l(i, j) / n2;
    }
  }
}

void set_flops(benchmark::State& state, std::size_t d, std::size_t k, std::size_t nv) {
  const double f = static_cast<double>(count_flops(d, k, nv).total);
  state.counters["flops"] = benchmark::Counter(f * static_cast<double>(state.iterations()),
                                               benchmark::Counter::kIsRate);
}

void BM_SandAlgorithm(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto nv = static_cast<std::size_t>(state.range(2));
  const Matrix l = gaussian(d, k, 1);
  const Matrix c = gaussian(nv, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sand_algorithm(l, c));
  set_flops(state, d, k, nv);
}

void BM_NaiveLoops(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto nv = static_cast<std::size_t>(state.range(2));
  const Matrix l = gaussian(d, k, 1);
  const Matrix c = gaussian(nv, d, 2);
  Vector s1, s2;
  for (auto _ : state) {
    naive(l, c, s1, s2);
    benchmark::DoNotOptimize(s1.data());
    benchmark::DoNotOptimize(s2.data());
  }
  set_flops(state, d, k, nv);
}

void BM_SandWhitened(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto nv = static_cast<std::size_t>(state.range(2));
  const ActivationDiffSet s{gaussian(d, k, 1), {}};
  const auto ctx = WhiteningContext::from_matrix(gaussian(nv, d, 2));
  for (auto _ : state) benchmark::DoNotOptimize(sand_whitened(s, ctx));
}

void BM_Spectrum(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto nv = static_cast<std::size_t>(state.range(1));
  const auto ctx = WhiteningContext::from_matrix(gaussian(nv, d, 3));
  for (auto _ : state) benchmark::DoNotOptimize(spectrum(ctx, 50));
}

#define SHAPES Args({64, 32, 256})->Args({128, 64, 512})->Args({256, 64, 2048})

BENCHMARK(BM_SandAlgorithm)->SHAPES->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NaiveLoops)->SHAPES->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SandWhitened)->SHAPES->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Spectrum)->Args({64, 512})->Args({256, 2048})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
