#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "grasshopper/kernels.hpp"
#include "grasshopper/legendre.hpp"

using namespace grasshopper;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<std::uint8_t> random_spins(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> s(n);
  for (auto& x : s) x = static_cast<std::uint8_t>(rng() & 1u);
  return s;
}

}  // namespace

TEST_CASE("pairwise_sum") {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  CHECK(kernels::pairwise_sum(v) == 500500.0);
  CHECK(kernels::pairwise_sum({}) == 0.0);
}

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  setenv("GRASSHOPPER_THREADS", "4", 1);
  const auto g = std::make_shared<const SphericalGrid>(generate_healpix(12));
  const double theta = 0.37 * pi;
  const auto a = kernels::serial::build_shell_rows(*g, theta);
  const auto b = kernels::omp::build_shell_rows(*g, theta);
  CHECK(a.offsets == b.offsets);
  CHECK(a.neighbors == b.neighbors);
  CHECK(a.weights == b.weights);

  const ShellTable t(g, theta, a.offsets, a.neighbors, a.weights);
  const auto s = random_spins(g->size(), 3);
  const auto u = random_spins(g->size(), 4);
  for (bool inv : {false, true}) {
    CHECK(kernels::serial::weighted_pair_sum(t, s, u, inv) ==
          kernels::omp::weighted_pair_sum(t, s, u, inv));
    CHECK(kernels::serial::weighted_pair_sum_direct(*g, theta, s, u, inv) ==
          kernels::omp::weighted_pair_sum_direct(*g, theta, s, u, inv));
  }
  CHECK(kernels::serial::row_sums(t) == kernels::omp::row_sums(t));
  CHECK(kernels::serial::harmonic_sums(g->points(), s, 20) ==
        kernels::omp::harmonic_sums(g->points(), s, 20));
  const std::vector<Vec3> axes = {{0, 0, 1}, normalized(Vec3{1, 2, 3}), {1, 0, 0}};
  CHECK(kernels::serial::zonal_sums(g->points(), s, axes, 15) ==
        kernels::omp::zonal_sums(g->points(), s, axes, 15));
  unsetenv("GRASSHOPPER_THREADS");
}

TEST_CASE("streamed and tabled pair sums agree") {
  const auto g = std::make_shared<const SphericalGrid>(generate_healpix(10));
  const double theta = 0.55 * pi;
  const auto rows = kernels::serial::build_shell_rows(*g, theta);
  const ShellTable t(g, theta, rows.offsets, rows.neighbors, rows.weights);
  const auto s = random_spins(g->size(), 9);
  const double tabled = kernels::serial::weighted_pair_sum(t, s, s, false);
  const double streamed = kernels::serial::weighted_pair_sum_direct(*g, theta, s, s, false);
  CHECK(streamed == doctest::Approx(tabled).epsilon(1e-13));
}

TEST_CASE("zonal sums match direct Legendre evaluation") {
  const auto g = generate_healpix(4);
  const auto s = random_spins(g.size(), 5);
  const Vec3 axis = normalized(Vec3{0.3, -0.2, 0.9});
  const auto z = kernels::serial::zonal_sums(g.points(), s, std::span(&axis, 1), 12);
  for (int l = 0; l <= 12; ++l) {
    double expect = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (s[i]) expect += std::legendre(l, dot(axis, g.point(i)));
    CHECK(z[0][l] == doctest::Approx(expect).epsilon(1e-12));
  }
}
