#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <numbers>
#include <random>

#include "grasshopper/kernels.hpp"
#include "grasshopper/lawn.hpp"
#include "grasshopper/triangular_cogs.hpp"

using namespace grasshopper;

namespace {

constexpr double pi = std::numbers::pi;

GridPtr grid(int n_side) {
  static std::map<int, GridPtr> cache;
  auto& g = cache[n_side];
  if (!g) g = std::make_shared<const SphericalGrid>(with_default_antipodes(generate_healpix(n_side)));
  return g;
}

Spins random_spins(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Spins s(n);
  for (auto& v : s) v = static_cast<std::uint8_t>(rng() & 1u);
  return s;
}

template <bool Omp>
void shell_rows(benchmark::State& state) {
  const GridPtr g = grid(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto rows = Omp ? kernels::omp::build_shell_rows(*g, 0.3 * pi) : kernels::serial::build_shell_rows(*g, 0.3 * pi);
    benchmark::DoNotOptimize(rows.weights.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(g->size()));
}

template <bool Omp>
void pair_sum(benchmark::State& state) {
  const GridPtr g = grid(static_cast<int>(state.range(0)));
  const ShellTable t = build_shell_table(g, 0.3 * pi);
  const Spins s = random_spins(g->size(), 1);
  for (auto _ : state) {
    const double v = Omp ? kernels::omp::weighted_pair_sum(t, s, s, false)
                         : kernels::serial::weighted_pair_sum(t, s, s, false);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(t.entry_count()));
}

template <bool Omp>
void harmonics(benchmark::State& state) {
  const GridPtr g = grid(static_cast<int>(state.range(0)));
  const Spins s = random_spins(g->size(), 2);
  for (auto _ : state) {
    auto v = Omp ? kernels::omp::harmonic_sums(g->points(), s, 63) : kernels::serial::harmonic_sums(g->points(), s, 63);
    benchmark::DoNotOptimize(v.data());
  }
}

void move_delta(benchmark::State& state) {
  const GridPtr g = grid(static_cast<int>(state.range(0)));
  const ShellTable t = build_shell_table(g, 0.3 * pi, true);
  const LawnState lawn = new_random_lawn(g, SetupKind::AntipodalOneLawn, 3);
  std::mt19937_64 rng(4);
  for (auto _ : state) {
    const auto i = static_cast<std::uint32_t>(rng() % g->size());
    benchmark::DoNotOptimize(delta_probability(lawn, Move::pair_flip(1, i), t));
  }
}

void cog_probability(benchmark::State& state) {
  const CoggedLawnSpec spec = build_cogged_lawn(3, 5, 0.3);
  QuadratureOptions opts;
  opts.tolerance = 1e-11;
  for (auto _ : state) benchmark::DoNotOptimize(cogged_success_probability(spec, pi / 3, opts));
}

}  // namespace

BENCHMARK(shell_rows<false>)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(shell_rows<true>)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(pair_sum<false>)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(pair_sum<true>)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(harmonics<false>)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(harmonics<true>)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(move_delta)->Arg(32);
BENCHMARK(cog_probability)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
