#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "grasshopper/analysis.hpp"
#include "grasshopper/error.hpp"
#include "oracles.hpp"

using namespace grasshopper;

namespace {

constexpr double pi = std::numbers::pi;

GridPtr healpix(int n_side) {
  return std::make_shared<const SphericalGrid>(with_default_antipodes(generate_healpix(n_side)));
}

const GridPtr& grid12k() {
  static const GridPtr g = healpix(32);
  return g;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

/// Antipodal lawn whose boundary about `axis` is Theta(phi) = pi/2 + A sin(k phi)
/// (k odd, so the curve is its own antipodal image).
LawnState sinusoidal_cog_lawn(const GridPtr& grid, const Vec3& axis, int k, double amplitude) {
  const Frame f = Frame::about(axis);
  const SphericalGrid& g = *grid;
  Spins s(g.size());
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const std::uint32_t j = g.antipode(i);
    if (dot(g.point(i), f.e3) < dot(g.point(j), f.e3) || (dot(g.point(i), f.e3) == dot(g.point(j), f.e3) && i > j))
      continue;
    const Vec3 q = f.to_local(g.point(i));
    s[i] = polar_angle(q) < pi / 2 + amplitude * std::sin(k * azimuth(q));
    s[j] = s[i] ^ 1u;
  }
  return LawnState(grid, SetupKind::AntipodalOneLawn, std::move(s));
}

BoundarySeries synthetic_series(int bins, auto&& fn) {
  BoundarySeries s;
  s.axis = {0, 0, 1};
  for (int b = 0; b < bins; ++b) {
    const double phi = (b + 0.5) * 2 * pi / bins;
    s.phi.push_back(phi);
    s.theta.push_back(fn(2 * pi * b / bins));
    s.valid.push_back(1);
  }
  return s;
}

}  // namespace

TEST_CASE("hemisphere reference") {
  CHECK(hemisphere_reference(pi / 2) == 0.5);
  CHECK(hemisphere_reference(0.0) == 1.0);
  CHECK(hemisphere_reference(pi) == 0.0);
}

TEST_CASE("alignment axis recovers a hemisphere axis") {
  const Vec3 axis = normalized(Vec3{0.4, -0.7, 0.2});
  const auto hemi = hemisphere_lawn(grid12k(), axis, SetupKind::AntipodalOneLawn);
  const Vec3 found = alignment_axis(hemi);
  CHECK(dot(found, axis) > std::cos(0.02));
}

TEST_CASE("boundary of a hemisphere is flat") {
  const Vec3 axis = normalized(Vec3{1, 1, 1});
  const auto hemi = hemisphere_lawn(grid12k(), axis, SetupKind::AntipodalOneLawn);
  const auto series = extract_boundary(hemi, axis, 128);
  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < series.theta.size(); ++b) {
    if (!series.valid[b]) continue;
    mean += series.theta[b];
    ++n;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t b = 0; b < series.theta.size(); ++b)
    if (series.valid[b]) var += (series.theta[b] - mean) * (series.theta[b] - mean);
  const double h = grid12k()->spacing();
  CHECK(std::abs(mean - pi / 2) < h);
  CHECK(std::sqrt(var / static_cast<double>(n)) < 2 * h);

  // The same boundary seen from an axis in its plane touches two azimuths.
  const Frame f = Frame::about(axis);
  CHECK(code_of([&] { extract_boundary(hemi, f.e1, 512); }) == ErrorCode::DegenerateBoundary);
  CHECK(code_of([&] { extract_boundary(hemi, axis, 32); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("fourier spectrum of synthetic boundaries") {
  const auto flat = synthetic_series(256, [](double) { return 1.3; });
  for (double a : fourier_spectrum(flat)) CHECK(std::abs(a) < 1e-12);

  const auto sine = synthetic_series(256, [](double phi) { return pi / 2 + 0.2 * std::sin(7 * phi + 0.4); });
  const auto amp = fourier_spectrum(sine);
  REQUIRE(amp.size() == 129);
  CHECK(amp[7] == doctest::Approx(0.2).epsilon(1e-10));
  for (std::size_t n = 1; n < amp.size(); ++n)
    if (n != 7) CHECK(amp[n] < 1e-10);

  // Triangle wave: odd harmonics only, falling like 1/n^2.
  const auto tri = synthetic_series(512, [](double phi) {
    const double t = std::fmod(phi / (2 * pi), 1.0);
    return pi / 2 + 0.3 * (t < 0.5 ? 4 * t - 1 : 3 - 4 * t);
  });
  const auto ta = fourier_spectrum(tri);
  for (int n : {3, 5, 7, 9}) CHECK(ta[n] / ta[1] == doctest::Approx(1.0 / (n * n)).epsilon(0.02));
  for (int n : {2, 4, 6}) CHECK(ta[n] < 1e-10);

  // Masked bins are interpolated; too many masked bins are refused.
  auto holes = sine;
  for (int b = 0; b < 256; b += 8) holes.valid[b] = 0;
  CHECK(fourier_spectrum(holes)[7] == doctest::Approx(0.2).epsilon(0.01));
  for (int b = 0; b < 256; b += 2) holes.valid[b] = 0;
  CHECK(code_of([&] { fourier_spectrum(holes); }) == ErrorCode::DegenerateBoundary);
}

TEST_CASE("cog count of constructed sinusoidal lawns") {
  const Vec3 axis = normalized(Vec3{0.3, 0.5, -0.8});
  for (int k : {3, 5, 7, 9, 13}) {
    CAPTURE(k);
    const auto lawn = sinusoidal_cog_lawn(grid12k(), axis, k, 0.25);
    const CogReport r = count_cogs(lawn, 2 * pi / k);
    CHECK(r.cog_count == k);
    CHECK(r.mode == 1);
    CHECK(std::abs(dot(r.axis, axis)) > std::cos(0.05));
    // The interface band is about 3h wide, so tips read slightly low or high.
    CHECK(r.height == doctest::Approx(0.25).epsilon(0.25));
    CHECK(r.height_std < 0.05);
  }
}

TEST_CASE("cog count of featureless lawns is zero") {
  const auto hemi = hemisphere_lawn(grid12k(), {0, 0, 1}, SetupKind::AntipodalOneLawn);
  CHECK(count_cogs(hemi, 0.3 * pi).cog_count == 0);
  // A random lawn stands in for a labyrinth: boundary branches at every
  // latitude, so no azimuthal bin has a single boundary position.
  const auto noise = new_random_lawn(grid12k(), SetupKind::AntipodalOneLawn, 5);
  CHECK(code_of([&] { count_cogs(noise, 0.49 * pi); }) == ErrorCode::DegenerateBoundary);
}

TEST_CASE("mode follows the setup") {
  const auto lawn = sinusoidal_cog_lawn(grid12k(), {0, 0, 1}, 5, 0.25);
  CHECK(count_cogs(lawn, 0.2 * pi).mode == 1);  // one-lawn: k theta / 2 pi
  CHECK(count_cogs(lawn, 0.8 * pi).mode == 2);
  const LawnState two(grid12k(), SetupKind::AntipodalTwoLawn, lawn.spins(1), lawn.spins(1));
  CHECK(count_cogs(two, 0.2 * pi).mode == 1);  // two-lawn: k theta / pi
  CHECK(count_cogs(two, 0.4 * pi).mode == 2);
}

TEST_CASE("stripe counting") {
  const Vec3 axis = normalized(Vec3{-0.2, 0.9, 0.3});
  for (int n : {1, 2, 3, 5}) {
    CAPTURE(n);
    const auto lawn = regular_stripe_lawn(grid12k(), axis, n, true);
    CHECK(lawn.area(1) == lawn.size() / 2);
    const StripeReport r = count_stripes(lawn, 0.8 * pi);
    CHECK(r.stripe_count == n);
    CHECK(std::abs(dot(r.axis, axis)) > std::cos(0.25 * grid12k()->spacing()));
    CHECK(r.width == doctest::Approx(pi / (2 * n)));
  }
  const auto hemi = hemisphere_lawn(grid12k(), axis, SetupKind::AntipodalOneLawn);
  const StripeReport r = count_stripes(hemi, 0.5 * pi);
  CHECK(r.stripe_count == 1);
  CHECK(r.predicted_width == doctest::Approx(std::sqrt(3.0) / 2 * 0.5 * pi));
  // The axis is chosen to maximize zonal power, so even white noise clears
  // the 2x threshold narrowly; regular bands clear it by orders of magnitude.
  const auto noise = new_random_lawn(grid12k(), SetupKind::AntipodalOneLawn, 3);
  const double noisy = count_stripes(noise, 0.8 * pi).zonal_ratio;
  CHECK(noisy > 1.0);
  CHECK(noisy < 5.0);
  CHECK(count_stripes(regular_stripe_lawn(grid12k(), axis, 3, true), 0.8 * pi).zonal_ratio > 100.0);
}

TEST_CASE("predicted stripe count") {
  CHECK(predicted_stripes(0.9 * pi) == doctest::Approx(10 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(predicted_stripes(pi - pi / std::sqrt(3.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::isinf(predicted_stripes(pi)));
  CHECK(predicted_stripes(0.8 * pi) == doctest::Approx(2.8868).epsilon(1e-4));
}

TEST_CASE("regular stripe comparison") {
  const Vec3 axis = normalized(Vec3{0.1, 0.2, 1.0});
  const auto shells = build_shell_table(grid12k(), 0.8 * pi, true);
  const auto zonal = regular_stripe_lawn(grid12k(), axis, 3, false);
  const StripeComparison c = compare_regular_stripes(zonal, shells);
  CHECK(c.stripe_count == 3);
  CHECK(std::abs(c.difference) < 1e-6);
  const LawnState two(grid12k(), SetupKind::AntipodalTwoLawn, zonal.spins(1), zonal.spins(1));
  CHECK(code_of([&] { compare_regular_stripes(two, shells); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("planar stripe model") {
  const double r_opt = 2 / std::sqrt(3.0);
  CHECK(std::abs(planar_stripe_success(r_opt) - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(planar_stripe_optimum() - r_opt) < 1e-9);
  CHECK(std::abs(planar_stripe_success_derivative(r_opt)) < 1e-12);
  CHECK(std::abs(planar_stripe_success(1.0) - 2 / pi) < 1e-14);
  CHECK(std::abs(planar_stripe_success(std::nextafter(1.0, 2.0)) - 2 / pi) < 1e-14);
  CHECK(std::abs(planar_stripe_success(1e6) - 0.5) < 1e-3);

  // Angle-level behaviour.
  for (double y : {0.0, 0.3, 0.99}) CHECK(planar_stripe_angle_success(1.5, 0.0, y) == 0);
  for (double r : {1.0, 1.3, 2.0}) {
    const double phi = std::asin(1.0 / r);
    for (double y : {0.0, 0.25, 0.5, 0.999}) CHECK(planar_stripe_angle_success(r, phi, y) == 1);
  }
  CHECK(planar_stripe_h(r_opt, pi / 2) == doctest::Approx(2 - r_opt).epsilon(1e-14));

  // Numerical (phi, y) quadrature against the closed form.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double r = std::max(1e-6, dist(rng));
    CAPTURE(r);
    CHECK(std::abs(oracle::planar_stripe_quadrature(r) - planar_stripe_success(r)) < 1e-6);
  }
  for (double r : {2.5, 3.7, 8.2}) {
    CAPTURE(r);
    CHECK(std::abs(oracle::planar_stripe_quadrature(r) - planar_stripe_success(r)) < 1e-6);
  }
}
