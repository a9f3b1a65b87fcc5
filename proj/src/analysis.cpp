#include "grasshopper/analysis.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "grasshopper/error.hpp"
#include "grasshopper/kernels.hpp"
#include "grasshopper/legendre.hpp"
#include "grasshopper/site_index.hpp"

namespace grasshopper {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double kMaxBinSpread = 0.25;

double power_from_sums(std::span<const double> sums, double h2) {
  double p = 0.0;
  for (std::size_t l = 1; l < sums.size(); ++l) {
    const double mu = h2 * std::sqrt((2.0 * l + 1.0) / (4.0 * pi)) * sums[l];
    p += mu * mu;
  }
  return p;
}

std::vector<Vec3> spiral_axes(std::size_t count) {
  std::vector<Vec3> axes(count);
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    axes[i] = {r * std::cos(golden * i), r * std::sin(golden * i), z};
  }
  return axes;
}

/// Sites of `lawn` with an opposite-spin site within 1.5 h.
std::vector<std::uint32_t> interface_sites(const LawnState& state, int lawn) {
  const SphericalGrid& g = state.grid();
  const SiteIndex index(g);
  const Spins& s = state.spins(lawn);
  const double radius = 1.5 * g.spacing();
  std::vector<std::uint32_t> out;
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    for (std::uint32_t j : index.neighbors_within(i, radius)) {
      if (s[j] != s[i]) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

BoundarySeries bin_boundary(const LawnState& state, std::span<const std::uint32_t> sites,
                            const Vec3& axis, int bins) {
  if (bins < 64) fail(ErrorCode::InvalidArgument, "boundary needs at least 64 bins");
  const Frame frame = Frame::about(axis);
  BoundarySeries out;
  out.axis = frame.e3;
  out.phi.resize(bins);
  out.theta.assign(bins, 0.0);
  out.valid.assign(bins, 0);
  std::vector<std::size_t> count(bins, 0);
  std::vector<double> square(bins, 0.0);
  for (std::uint32_t i : sites) {
    const Vec3 q = frame.to_local(state.grid().point(i));
    const int b = std::min(bins - 1, static_cast<int>(azimuth(q) / (2.0 * pi) * bins));
    const double t = polar_angle(q);
    out.theta[b] += t;
    square[b] += t * t;
    ++count[b];
  }
  for (int b = 0; b < bins; ++b) {
    out.phi[b] = (b + 0.5) * 2.0 * pi / bins;
    if (!count[b]) continue;
    const double n = static_cast<double>(count[b]);
    out.theta[b] /= n;
    // A bin whose interface sites sit at several latitudes is crossed by
    // more than one boundary branch (caps, stripes, labyrinths).
    const double spread = std::sqrt(std::max(0.0, square[b] / n - out.theta[b] * out.theta[b]));
    out.valid[b] = spread <= kMaxBinSpread;
  }
  if (out.valid_count() * 4 < static_cast<std::size_t>(bins)) {
    fail(ErrorCode::DegenerateBoundary,
         "boundary fills " + std::to_string(out.valid_count()) + " of " + std::to_string(bins) +
             " azimuthal bins; the lawn has no equatorial boundary");
  }
  return out;
}

/// Masked bins filled by periodic linear interpolation.
std::vector<double> filled_series(const BoundarySeries& s) {
  const std::size_t n = s.theta.size();
  const std::size_t valid = s.valid_count();
  if (valid == 0 || (n - valid) * 4 > n) {
    fail(ErrorCode::DegenerateBoundary, "more than 25% of the boundary bins are empty");
  }
  std::vector<double> x(n);
  for (std::size_t b = 0; b < n; ++b) {
    if (s.valid[b]) {
      x[b] = s.theta[b];
      continue;
    }
    std::size_t lo = 1;
    while (!s.valid[(b + n - lo) % n]) ++lo;
    std::size_t hi = 1;
    while (!s.valid[(b + hi) % n]) ++hi;
    const double t = static_cast<double>(lo) / static_cast<double>(lo + hi);
    x[b] = (1.0 - t) * s.theta[(b + n - lo) % n] + t * s.theta[(b + hi) % n];
  }
  return x;
}

std::vector<std::complex<double>> dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t b = 0; b < n; ++b) acc += x[b] * std::polar(1.0, -2.0 * pi * k * b / n);
    out[k] = acc;
  }
  return out;
}

template <typename T>
T u_closed_form(T r) {
  using std::asin;
  using std::sqrt;
  const T p = boost::math::constants::pi<T>();
  if (r <= 1) return 2 * r / p;
  return (2 / p) * (r - 2 * sqrt(r * r - 1) + p - 2 * asin(1 / r));
}

}  // namespace

double hemisphere_reference(double theta) { return 1.0 - theta / pi; }

OrientationStats hemisphere_orientation_stats(const ShellTable& shells, int orientations,
                                              std::uint64_t seed) {
  if (orientations < 1) fail(ErrorCode::InvalidArgument, "orientations must be positive");
  const SetupKind setup = shells.grid().has_antipodes() ? SetupKind::AntipodalOneLawn
                                                        : SetupKind::NonAntipodalOneLawn;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  OrientationStats out;
  out.theta = shells.theta();
  out.reference = hemisphere_reference(shells.theta());
  for (int k = 0; k < orientations; ++k) {
    Vec3 a{gauss(rng), gauss(rng), gauss(rng)};
    while (norm(a) < 1e-12) a = {gauss(rng), gauss(rng), gauss(rng)};
    out.samples.push_back(
        evaluate_probability(hemisphere_lawn(shells.grid_ptr(), normalized(a), setup), shells));
  }
  const double n = static_cast<double>(orientations);
  out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double p : out.samples) ss += (p - out.mean) * (p - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

double zonal_power(const LawnState& state, int lawn, const Vec3& axis, int ell_max) {
  const Vec3 a = normalized(axis);
  const auto sums = kernels::omp::zonal_sums(state.grid().points(), state.spins(lawn),
                                             std::span<const Vec3>(&a, 1), ell_max);
  return power_from_sums(sums[0], 4.0 * pi / static_cast<double>(state.size()));
}

Vec3 alignment_axis(const LawnState& state, int lawn, int ell_max) {
  const auto axes = spiral_axes(512);
  const auto sums = kernels::omp::zonal_sums(state.grid().points(), state.spins(lawn), axes, ell_max);
  const double h2 = 4.0 * pi / static_cast<double>(state.size());
  std::size_t best = 0;
  double best_p = -1.0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const double p = power_from_sums(sums[a], h2);
    if (p > best_p) {
      best_p = p;
      best = a;
    }
  }
  Vec3 axis = axes[best];
  double step = std::sqrt(4.0 * pi / 512.0);
  while (step > 1e-7) {
    const Frame f = Frame::about(axis);
    bool moved = false;
    for (const Vec3& d : {f.e1, f.e2, -f.e1, -f.e2}) {
      const Vec3 trial = normalized(axis + d * step);
      const double p = zonal_power(state, lawn, trial, ell_max);
      if (p > best_p) {
        best_p = p;
        axis = trial;
        moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  Vec3 centroid{0, 0, 0};
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state.spins(lawn)[i]) centroid += state.grid().point(i);
  return dot(centroid, axis) < 0.0 ? -axis : axis;
}

std::size_t BoundarySeries::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

BoundarySeries extract_boundary(const LawnState& state, const Vec3& axis, int bins, int lawn) {
  const auto sites = interface_sites(state, lawn);
  return bin_boundary(state, sites, axis, bins);
}

std::vector<double> fourier_spectrum(const BoundarySeries& series) {
  std::vector<double> x = filled_series(series);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  for (double& v : x) v -= mean;
  const auto c = dft(x);
  const double n = static_cast<double>(x.size());
  std::vector<double> amp(c.size(), 0.0);
  for (std::size_t k = 1; k < c.size(); ++k) amp[k] = (2 * k == x.size() ? 1.0 : 2.0) * std::abs(c[k]) / n;
  return amp;
}

CogReport count_cogs(const LawnState& state, double theta, int lawn, int bins) {
  CogReport rep;
  rep.axis = alignment_axis(state, lawn);
  const auto sites = interface_sites(state, lawn);
  if (bins <= 0) {
    bins = 512;
    while (bins > 64 && sites.size() < 4 * static_cast<std::size_t>(bins)) bins /= 2;
  }
  rep.bins = bins;
  const BoundarySeries series = bin_boundary(state, sites, rep.axis, bins);
  rep.fourier_amplitudes = fourier_spectrum(series);
  const auto& amp = rep.fourier_amplitudes;

  std::vector<double> tail(amp.begin() + 1, amp.end());
  std::nth_element(tail.begin(), tail.begin() + tail.size() / 2, tail.end());
  const double median = tail[tail.size() / 2];
  const int k = static_cast<int>(std::max_element(amp.begin() + 1, amp.end()) - amp.begin());
  // Sub-cell ripples are grid texture, not cogs.
  if (!(amp[k] > 5.0 * median) || amp[k] < 0.25 * state.grid().spacing()) return rep;

  rep.cog_count = k;
  const double span = is_two_lawn(state.setup()) ? pi : 2.0 * pi;
  rep.mode = static_cast<int>(std::lround(k * theta / span));

  // Peaks and troughs of the k-th harmonic locate the cog tips; the height
  // sample is the largest |Theta - pi/2| of the lightly smoothed boundary in
  // a quarter-period window around each.
  const std::vector<double> x = filled_series(series);
  const std::size_t n = x.size();
  std::vector<double> sm(n);
  for (std::size_t b = 0; b < n; ++b) sm[b] = (x[(b + n - 1) % n] + x[b] + x[(b + 1) % n]) / 3.0;
  std::vector<double> xc(x);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  for (double& v : xc) v -= mean;
  const double psi = -std::arg(dft(xc)[k]);
  const double half_window = static_cast<double>(n) / (4.0 * k);
  std::vector<double> heights;
  for (int j = 0; j < 2 * k; ++j) {
    const double center = (psi + pi * j) / k / (2.0 * pi) * static_cast<double>(n);
    double h = 0.0;
    for (int d = static_cast<int>(std::ceil(center - half_window));
         d <= static_cast<int>(std::floor(center + half_window)); ++d) {
      const std::size_t b = static_cast<std::size_t>(((d % static_cast<int>(n)) + static_cast<int>(n)) % static_cast<int>(n));
      h = std::max(h, std::abs(sm[b] - pi / 2));
    }
    heights.push_back(h);
  }
  const double hm = std::accumulate(heights.begin(), heights.end(), 0.0) / static_cast<double>(heights.size());
  double var = 0.0;
  for (double h : heights) var += (h - hm) * (h - hm);
  rep.height = hm;
  rep.height_std = std::sqrt(var / static_cast<double>(heights.size() - 1));
  return rep;
}

StripeReport count_stripes(const LawnState& state, double theta) {
  constexpr int kEll = 40;
  constexpr int kRings = 256;
  StripeReport rep;
  rep.axis = alignment_axis(state, 1, kEll);
  rep.predicted = predicted_stripes(theta);
  rep.predicted_width = std::sqrt(3.0) / 2.0 * (pi - theta);

  const Frame frame = Frame::about(rep.axis);
  const SphericalGrid& g = state.grid();
  std::vector<Vec3> local(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) local[i] = frame.to_local(g.point(i));

  const auto sums = kernels::omp::harmonic_sums(local, state.spins(1), kEll);
  const double h2 = 4.0 * pi / static_cast<double>(g.size());
  double zonal = 0.0;
  double nonzonal = 0.0;
  for (int l = 1; l <= kEll; ++l) {
    zonal += std::norm(h2 * sums[tri_index(l, 0)]);
    for (int m = 1; m <= l; ++m) nonzonal += 2.0 * std::norm(h2 * sums[tri_index(l, m)]);
  }
  // Non-zonal power averaged over the bands l = 1..L.
  rep.zonal_ratio = nonzonal > 0.0 ? zonal / (nonzonal / kEll) : std::numeric_limits<double>::infinity();
  if (rep.zonal_ratio < 2.0) {
    fail(ErrorCode::NoStripeStructure, "zonal power is below twice the mean non-zonal band power");
  }

  std::vector<double> sum(kRings, 0.0);
  std::vector<std::size_t> count(kRings, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int r = std::min(kRings - 1, static_cast<int>(polar_angle(local[i]) / pi * kRings));
    sum[r] += state.spins(1)[i];
    ++count[r];
  }
  rep.ring_means.assign(kRings, std::numeric_limits<double>::quiet_NaN());
  bool inside = false;
  for (int r = 0; r < kRings; ++r) {
    if (!count[r]) continue;
    rep.ring_means[r] = sum[r] / static_cast<double>(count[r]);
    const bool lawn = rep.ring_means[r] > 0.5;
    if (lawn && !inside) ++rep.stripe_count;
    inside = lawn;
  }
  if (rep.stripe_count < 1) fail(ErrorCode::NoStripeStructure, "no latitude band belongs to the lawn");
  rep.width = pi / (2.0 * rep.stripe_count);
  return rep;
}

double predicted_stripes(double theta) {
  if (theta >= pi) return std::numeric_limits<double>::infinity();
  return pi / (std::sqrt(3.0) * (pi - theta));
}

LawnState regular_stripe_lawn(GridPtr grid, const Vec3& axis, int stripes, bool pole_in_lawn,
                              SetupKind setup) {
  if (stripes < 1) fail(ErrorCode::InvalidArgument, "stripe count must be >= 1");
  const SphericalGrid& g = *grid;
  const Vec3 a = normalized(axis);
  const double width = pi / (2.0 * stripes);
  const auto color = [&](std::uint32_t i) -> std::uint8_t {
    const double from_south = pi - spherical_angle(g.point(i), a);
    const int band = std::min(2 * stripes - 1, static_cast<int>(from_south / width));
    return (band % 2 == 0) == pole_in_lawn;
  };
  Spins s(g.size());
  for (std::uint32_t i = 0; i < g.size(); ++i) {
    const std::uint32_t j = g.antipode(i);
    const double di = dot(g.point(i), a);
    const double dj = dot(g.point(j), a);
    const bool decides = di > dj || (di == dj && i < j);
    if (decides) {
      s[i] = color(i);
      s[j] = s[i] ^ 1u;
    }
  }
  if (is_two_lawn(setup)) return LawnState(std::move(grid), setup, s, s);
  return LawnState(std::move(grid), setup, std::move(s));
}

StripeComparison compare_regular_stripes(const LawnState& state, const ShellTable& shells) {
  if (is_two_lawn(state.setup())) {
    fail(ErrorCode::InvalidArgument, "stripe comparison is defined for one-lawn setups");
  }
  const StripeReport rep = count_stripes(state, shells.theta());
  bool pole = false;
  for (auto it = rep.ring_means.rbegin(); it != rep.ring_means.rend(); ++it) {
    if (!std::isnan(*it)) {
      pole = *it > 0.5;
      break;
    }
  }
  // The zonal-power axis is only resolved to a fraction of a cell; settle it
  // by maximizing site-by-site agreement with the input.
  const auto agreement = [&](const Vec3& a) {
    const LawnState r = regular_stripe_lawn(state.grid_ptr(), a, rep.stripe_count, pole, state.setup());
    std::size_t same = 0;
    for (std::size_t i = 0; i < state.size(); ++i) same += r.spins(1)[i] == state.spins(1)[i];
    return same;
  };
  Vec3 axis = rep.axis;
  std::size_t best = agreement(axis);
  for (double step = 0.5 * state.grid().spacing(); step > 1e-6 && best < state.size();) {
    const Frame f = Frame::about(axis);
    bool moved = false;
    for (const Vec3& d : {f.e1, f.e2, -f.e1, -f.e2}) {
      const Vec3 trial = normalized(axis + d * step);
      const std::size_t a = agreement(trial);
      if (a > best) {
        best = a;
        axis = trial;
        moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  const LawnState regular =
      regular_stripe_lawn(state.grid_ptr(), axis, rep.stripe_count, pole, state.setup());
  StripeComparison c;
  c.stripe_count = rep.stripe_count;
  c.irregular = evaluate_probability(state, shells);
  c.regular = evaluate_probability(regular, shells);
  c.difference = c.regular - c.irregular;
  return c;
}

int planar_stripe_angle_success(double r, double phi, double y) {
  // Unit-width stripes alternate color; the jump lands on the other color
  // when floor(y + r sin phi) is odd. For r sin phi <= 2 this is
  // 1 - r sin phi <= y < 2 - r sin phi.
  const double landing = y + r * std::sin(phi);
  return static_cast<long long>(std::floor(landing)) % 2 != 0 ? 1 : 0;
}

double planar_stripe_h(double r, double phi) {
  // Triangle wave of period 2: x for x <= 1, 2 - x up to 2, and so on.
  const double x = std::fmod(r * std::sin(phi), 2.0);
  return x <= 1.0 ? x : 2.0 - x;
}

namespace {

/// (2 / pi) int_0^{pi/2} h(r, phi) dphi, and its r-derivative, piece by piece
/// between the crossings phi_k = asin(k / r).
std::pair<double, double> planar_integral(double r) {
  if (r <= 0.0) return {0.0, 0.0};
  double u = 0.0;
  double du = 0.0;
  const long long pieces = static_cast<long long>(std::ceil(r));
  for (long long k = 0; k < pieces; ++k) {
    const double a = std::asin(static_cast<double>(k) / r);
    const double b = k + 1 >= r ? pi / 2 : std::asin(static_cast<double>(k + 1) / r);
    const double rc = r * (std::cos(a) - std::cos(b));
    if (k % 2 == 0) {
      u += rc - static_cast<double>(k) * (b - a);
      du += std::cos(a) - std::cos(b);
    } else {
      u += static_cast<double>(k + 1) * (b - a) - rc;
      du -= std::cos(a) - std::cos(b);
    }
  }
  return {2.0 / pi * u, 2.0 / pi * du};
}

}  // namespace

double planar_stripe_success(double r) {
  if (r <= 2.0) return u_closed_form(r);
  return planar_integral(r).first;
}

double planar_stripe_success_derivative(double r) {
  if (r <= 1.0) return 2.0 / pi;
  if (r <= 2.0) return 2.0 / pi * (1.0 - 2.0 * std::sqrt(1.0 - 1.0 / (r * r)));
  return planar_integral(r).second;
}

double planar_stripe_optimum(double tol) {
  using Quad = boost::multiprecision::cpp_bin_float_quad;
  const Quad inv = (boost::multiprecision::sqrt(Quad(5)) - 1) / 2;
  Quad a = 1;
  Quad b = 2;
  Quad c = b - inv * (b - a);
  Quad d = a + inv * (b - a);
  Quad fc = u_closed_form(c);
  Quad fd = u_closed_form(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv * (b - a);
      fc = u_closed_form(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv * (b - a);
      fd = u_closed_form(d);
    }
  }
  return static_cast<double>((a + b) / 2);
}

}  // namespace grasshopper
