#include "grasshopper/triangular_cogs.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <sstream>

#include "grasshopper/error.hpp"
#include "grasshopper/io.hpp"

namespace grasshopper {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double kTangencyBand = 1e-13;
constexpr double kNudge = 1e-11;

Vec3 on_equator(double phi) { return {std::cos(phi), std::sin(phi), 0.0}; }

int positive_mod(int a, int m) { return ((a % m) + m) % m; }

/// Tooth index j whose (antipodal) position is `label`.
int tooth_of_gap(int label, int k) { return positive_mod(label - k, 2 * k) / 2; }

/// Region code of a point: j >= 0 tooth j, -1 - j gap j, kNorth / kSouth rest.
constexpr int kNorth = -1'000'000;
constexpr int kSouth = -1'000'001;

bool in_tooth(const Tooth& t, const Vec3& x) {
  return x.z < 0.0 && dot(x, t.left_normal) > 0.0 && dot(x, t.right_normal) > 0.0;
}

int nearest_tooth(const Vec3& x, int k) {
  return positive_mod(static_cast<int>(std::lround(azimuth(x) * k / (2.0 * pi))), k);
}

int classify(const CoggedLawnSpec& spec, const Vec3& x) {
  if (x.z < 0.0) {
    const int j = nearest_tooth(x, spec.k);
    return in_tooth(spec.teeth[j], x) ? j : kSouth;
  }
  const int j = nearest_tooth(-x, spec.k);
  return in_tooth(spec.teeth[j], -x) ? -1 - j : kNorth;
}

/// Crossing angles of the circle about p (frame e1, e2) of radius theta with
/// each great circle. Returns false on a near tangency.
bool crossings(const Vec3& p, const Vec3& e1, const Vec3& e2, double theta,
               const std::vector<Vec3>& normals, std::vector<double>& out) {
  out.clear();
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  for (const Vec3& n : normals) {
    const double a = dot(n, e1);
    const double b = dot(n, e2);
    const double r = std::hypot(a, b);
    if (r * st < 1e-300) continue;  // circle parallel to this great circle
    const double c = -ct * dot(n, p) / (st * r);
    if (std::abs(std::abs(c) - 1.0) < kTangencyBand) return false;
    if (std::abs(c) > 1.0) continue;
    const double base = std::atan2(b, a);
    const double d = std::acos(c);
    for (double psi : {base + d, base - d}) {
      psi = std::fmod(psi, 2.0 * pi);
      if (psi < 0.0) psi += 2.0 * pi;
      out.push_back(psi);
    }
  }
  std::sort(out.begin(), out.end());
  return true;
}

void accumulate(RegionArcs& arcs, int region, double fraction) {
  if (region == kNorth) {
    arcs.north_rest += fraction;
  } else if (region == kSouth) {
    arcs.south_rest += fraction;
  } else if (region >= 0) {
    arcs.teeth[region] += fraction;
  } else {
    arcs.gaps[-1 - region] += fraction;
  }
}

/// Polar z of the side circle of a tooth at local azimuth |delta| <= half base.
double side_z(double height, double half_base, double delta) {
  const double lat = std::atan(-std::tan(height) * std::sin(half_base - std::abs(delta)) /
                               std::sin(half_base));
  return std::sin(lat);
}

/// Globally adaptive 31-point Gauss-Kronrod: always bisects the panel with
/// the largest error estimate until the summed estimate meets the absolute
/// tolerance. Panels whose estimate is at roundoff level are not split.
template <typename F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opts) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  const auto panel = [&](double lo, double hi) {
    double error = 0.0;
    double l1 = 0.0;
    const double v = GK::integrate(f, lo, hi, 0, 0.0, &error, &l1);
    // Below this the estimate measures roundoff, not truncation.
    if (error < 64.0 * std::numeric_limits<double>::epsilon() * l1) error = 0.0;
    return Panel{lo, hi, v, error};
  };
  std::priority_queue<Panel> heap;
  heap.push(panel(a, b));
  double total_error = heap.top().error;
  while (total_error > opts.tolerance) {
    if (heap.size() >= opts.max_panels) {
      std::ostringstream msg;
      msg << "quadrature error estimate " << total_error << " above " << opts.tolerance
          << " after " << opts.max_panels << " panels";
      fail(ErrorCode::QuadratureNotConverged, msg.str());
    }
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = panel(worst.a, mid);
    const Panel right = panel(mid, worst.b);
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  double sum = 0.0;
  for (; !heap.empty(); heap.pop()) sum += heap.top().value;
  return sum;
}

/// Points on the meridian at azimuth phi where the jump-circle fractions are
/// not smooth: the circle touches a boundary great circle ((n.p)^2 = sin^2
/// theta) or passes through a tooth or gap vertex (v.p = cos theta). Returned
/// as z values strictly inside (lo, hi), sorted, with the ends attached.
std::vector<double> meridian_breaks(const CoggedLawnSpec& spec, double theta, double phi,
                                    double lo, double hi) {
  std::vector<double> out{lo, hi};
  const double cp = std::cos(phi);
  const double sp = std::sin(phi);
  // Solve A cos(lat) + B sin(lat) = c for w.p = c on this meridian.
  const auto add = [&](const Vec3& w, double c) {
    const double a = w.x * cp + w.y * sp;
    const double b = w.z;
    const double r = std::hypot(a, b);
    if (r < 1e-300 || std::abs(c) > r) return;
    const double base = std::atan2(b, a);
    const double d = std::acos(c / r);
    for (double lat : {base + d, base - d}) {
      const double z = std::sin(lat);
      // Only the meridian half at azimuth phi (cos(lat) >= 0) is the domain.
      if (std::cos(lat) < 0.0) continue;
      if (z > lo && z < hi) out.push_back(z);
    }
  };
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  // The equator separates the north rest from the teeth everywhere.
  add({0.0, 0.0, 1.0}, st);
  add({0.0, 0.0, 1.0}, -st);
  if (spec.cog_height > 0.0) {
    for (const Tooth& t : spec.teeth) {
      for (const Vec3& v : {t.left, t.right, t.apex}) {
        add(v, ct);
        add(-v, ct);
      }
      // A side circle only matters where the circle touches the side segment
      // itself (or the gap's copy of it); the touching points from which the
      // circle is tangent there form two small circles of radius theta about
      // the segment's points, so test the candidates after solving.
      for (const auto& [from, normal] : {std::pair{t.left, t.left_normal}, std::pair{t.right, t.right_normal}}) {
        const std::size_t before = out.size();
        add(normal, st);
        add(normal, -st);
        const double span = spherical_angle(from, t.apex);
        std::size_t keep = before;
        for (std::size_t i = before; i < out.size(); ++i) {
          const double z = out[i];
          const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
          const Vec3 p{r * cp, r * sp, z};
          const double np = dot(normal, p);
          // Nearest point of the great circle to p; the circle touches there
          // when theta <= pi/2 and at the antipode otherwise.
          Vec3 touch = normalized(p - normal * np);
          if (theta > pi / 2) touch = -touch;
          const auto on_segment = [&](const Vec3& a, const Vec3& b) {
            return spherical_angle(a, touch) + spherical_angle(touch, b) < span + 1e-9;
          };
          if (on_segment(from, t.apex) || on_segment(-from, -t.apex)) out[keep++] = z;
        }
        out.resize(keep);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Angles x with a cos x + b sin x = c.
void solve_harmonic(double a, double b, double c, std::vector<double>& out) {
  const double r = std::hypot(a, b);
  if (r < 1e-300 || std::abs(c) > r) return;
  const double base = std::atan2(b, a);
  const double d = std::acos(c / r);
  out.push_back(base + d);
  out.push_back(base - d);
}

/// Azimuths where I(phi), the integral along one meridian, can kink: a small
/// circle of kinks (radius theta about a vertex, or a tangency locus about a
/// side pole) touches a meridian, or crosses one of the domain's bounding
/// great circles. Returned relative to `center` inside (lo, hi), with ends.
std::vector<double> azimuth_breaks(const CoggedLawnSpec& spec, double theta, double center,
                                   const std::vector<Vec3>& domain_sides, double lo, double hi) {
  std::vector<std::pair<Vec3, double>> circles;  // (pole, cos radius)
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  for (const Vec3& n : spec.boundary_normals()) {
    circles.emplace_back(n, st);
    circles.emplace_back(-n, st);
  }
  for (const Tooth& t : spec.teeth) {
    for (const Vec3& v : {t.left, t.right, t.apex}) {
      circles.emplace_back(v, ct);
      circles.emplace_back(-v, ct);
    }
  }
  std::vector<double> phis;
  std::vector<double> psis;
  for (const auto& [c, cos_r] : circles) {
    const double sin_r = std::sqrt(std::max(0.0, 1.0 - cos_r * cos_r));
    // Meridian plane normal (-sin phi, cos phi, 0) at distance sin_r from c.
    solve_harmonic(c.y, -c.x, sin_r, phis);
    solve_harmonic(c.y, -c.x, -sin_r, phis);
    for (const Vec3& n : domain_sides) {
      const Frame f = Frame::about(n);
      psis.clear();
      solve_harmonic(dot(c, f.e1), dot(c, f.e2), cos_r, psis);
      for (double psi : psis) phis.push_back(azimuth(f.e1 * std::cos(psi) + f.e2 * std::sin(psi)));
    }
  }
  std::vector<double> out{lo, hi};
  for (double phi : phis) {
    double d = std::remainder(phi - center, 2.0 * pi);
    if (d > lo && d < hi) out.push_back(d);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Integral over [lo, hi] split at the given breaks. Each piece is mapped by
/// x = 3t^2 - 2t^3, which turns square-root endpoint behaviour into a smooth
/// one (the jump-circle fractions have such kinks at tangencies).
template <typename F>
double integrate_pieces(F&& f, const std::vector<double>& breaks, const QuadratureOptions& opts) {
  QuadratureOptions piece = opts;
  piece.tolerance = opts.tolerance / static_cast<double>(std::max<std::size_t>(1, breaks.size() - 1));
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double w = breaks[i + 1] - a;
    if (w <= 0.0) continue;
    sum += integrate(
        [&](double t) { return f(a + w * t * t * (3.0 - 2.0 * t)) * 6.0 * w * t * (1.0 - t); }, 0.0,
        1.0, piece);
  }
  return sum;
}

/// Integral of g over the tooth or gap at position `label`, in (azimuth, z)
/// coordinates where dA = dphi dz. `one_half` limits the range to delta >= 0
/// when the caller exploits mirror symmetry.
template <typename G>
double integrate_cog(const CoggedLawnSpec& spec, double theta, int label, G&& g, bool one_half,
                     const QuadratureOptions& opts) {
  // Inner errors reach the outer rule as noise; keep them well below its target.
  QuadratureOptions inner_opts = opts;
  inner_opts.tolerance = opts.tolerance / 16.0;
  const double center = label * pi / spec.k;
  const double half = spec.half_base();
  const bool south = label % 2 == 0;
  const auto outer = [&](double delta) {
    const double zs = side_z(spec.cog_height, half, delta);
    if (zs == 0.0) return 0.0;
    const double phi = center + delta;
    const double cp = std::cos(phi);
    const double sp = std::sin(phi);
    const auto inner = [&](double z) {
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      return g(Vec3{r * cp, r * sp, z});
    };
    const double lo = south ? zs : 0.0;
    const double hi = south ? 0.0 : -zs;
    return integrate_pieces(inner, meridian_breaks(spec, theta, phi, lo, hi), inner_opts);
  };
  const Tooth& t = spec.teeth[south ? label / 2 : tooth_of_gap(label, spec.k)];
  const std::vector<Vec3> sides{{0.0, 0.0, 1.0}, t.left_normal, t.right_normal};
  const double right = integrate_pieces(outer, azimuth_breaks(spec, theta, center, sides, 0.0, half), opts);
  if (one_half) return right;
  return right + integrate_pieces(outer, azimuth_breaks(spec, theta, center, sides, -half, 0.0), opts);
}

}  // namespace

double CoggedLawnSpec::jump() const { return pi / q; }

double CoggedLawnSpec::half_base() const { return pi / (2.0 * k); }

std::vector<Vec3> CoggedLawnSpec::boundary_normals() const {
  std::vector<Vec3> n{{0.0, 0.0, 1.0}};
  if (cog_height == 0.0) return n;
  for (const Tooth& t : teeth) {
    n.push_back(t.left_normal);
    n.push_back(t.right_normal);
  }
  return n;
}

bool CoggedLawnSpec::in_lawn(const Vec3& x) const {
  const int r = classify(*this, x);
  return r == kNorth || r >= 0;
}

CoggedLawnSpec build_cogged_lawn(int q, int k, double height) {
  if (q < 2) fail(ErrorCode::InvalidGeometry, "q must be >= 2");
  if (k < 1 || k % 2 == 0) {
    fail(ErrorCode::InvalidGeometry, "cog count must be odd and positive so teeth and gaps alternate");
  }
  if (!(height >= 0.0 && height < pi / 2)) {
    fail(ErrorCode::InvalidGeometry, "cog height must lie in [0, pi/2)");
  }
  CoggedLawnSpec s;
  s.q = q;
  s.k = k;
  s.cog_height = height;
  const double half = s.half_base();
  for (int j = 0; j < k; ++j) {
    Tooth t;
    t.center = 2.0 * pi * j / k;
    t.left = on_equator(t.center - half);
    t.right = on_equator(t.center + half);
    t.apex = {std::cos(height) * std::cos(t.center), std::cos(height) * std::sin(t.center),
              -std::sin(height)};
    // Inward normals: the centroid direction must be on the positive side.
    const Vec3 inside = normalized(on_equator(t.center) * 2.0 + t.apex * 0.5);
    t.left_normal = height > 0.0 ? normalized(cross(t.left, t.apex)) : Vec3{};
    t.right_normal = height > 0.0 ? normalized(cross(t.apex, t.right)) : Vec3{};
    if (dot(t.left_normal, inside) < 0.0) t.left_normal = -t.left_normal;
    if (dot(t.right_normal, inside) < 0.0) t.right_normal = -t.right_normal;
    s.teeth.push_back(t);
  }
  return s;
}

RegionId tooth(int label) { return {RegionKind::Tooth, label}; }
RegionId gap(int label) { return {RegionKind::Gap, label}; }

std::string to_string(const RegionId& r) {
  switch (r.kind) {
    case RegionKind::Hemisphere: return "H";
    case RegionKind::Antihemisphere: return "Hbar";
    case RegionKind::Lawn: return "L";
    case RegionKind::Tooth: return "T" + std::to_string(r.label);
    case RegionKind::Gap: return "Tbar" + std::to_string(r.label);
  }
  return "?";
}

double RegionArcs::hemisphere() const {
  double s = north_rest;
  for (double g : gaps) s += g;
  return s;
}

double RegionArcs::lawn() const {
  double s = north_rest;
  for (double t : teeth) s += t;
  return s;
}

double RegionArcs::total() const {
  double s = north_rest + south_rest;
  for (double t : teeth) s += t;
  for (double g : gaps) s += g;
  return s;
}

double RegionArcs::fraction(const RegionId& r, int k) const {
  switch (r.kind) {
    case RegionKind::Hemisphere: return hemisphere();
    case RegionKind::Antihemisphere: return 1.0 - hemisphere();
    case RegionKind::Lawn: return lawn();
    case RegionKind::Tooth:
      if (positive_mod(r.label, 2) != 0) fail(ErrorCode::InvalidArgument, "tooth labels are even");
      return teeth[positive_mod(r.label, 2 * k) / 2];
    case RegionKind::Gap:
      if (positive_mod(r.label, 2) != 1) fail(ErrorCode::InvalidArgument, "gap labels are odd");
      return gaps[tooth_of_gap(r.label, k)];
  }
  return 0.0;
}

RegionArcs jump_circle_region_arcs(const Vec3& p, double theta, const CoggedLawnSpec& spec) {
  if (!(std::sin(theta) > 0.0)) fail(ErrorCode::InvalidArgument, "jump must satisfy sin(theta) > 0");
  const Frame f = Frame::about(p);
  const std::vector<Vec3> normals = spec.boundary_normals();
  RegionArcs arcs;
  arcs.teeth.assign(spec.k, 0.0);
  arcs.gaps.assign(spec.k, 0.0);
  if (!crossings(f.e3, f.e1, f.e2, theta, normals, arcs.angles)) {
    theta += kNudge;
    arcs.nudged = true;
    if (!crossings(f.e3, f.e1, f.e2, theta, normals, arcs.angles)) {
      fail(ErrorCode::TangencyUnresolved, "jump circle stays tangent to a boundary after nudging");
    }
  }
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const auto point_at = [&](double psi) {
    return f.e3 * ct + (f.e1 * std::cos(psi) + f.e2 * std::sin(psi)) * st;
  };
  const auto& a = arcs.angles;
  if (a.empty()) {
    accumulate(arcs, classify(spec, point_at(0.0)), 1.0);
    return arcs;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double lo = a[i];
    const double hi = i + 1 < a.size() ? a[i + 1] : a[0] + 2.0 * pi;
    if (hi - lo <= 0.0) continue;
    accumulate(arcs, classify(spec, point_at(0.5 * (lo + hi))), (hi - lo) / (2.0 * pi));
  }
  return arcs;
}

double region_pair_probability(const CoggedLawnSpec& spec, double theta, const RegionId& a,
                               const RegionId& b, const QuadratureOptions& opts) {
  const auto g = [&](const Vec3& p) {
    return jump_circle_region_arcs(p, theta, spec).fraction(b, spec.k);
  };
  double integral = 0.0;
  switch (a.kind) {
    case RegionKind::Hemisphere: {
      QuadratureOptions inner_opts = opts;
      inner_opts.tolerance = opts.tolerance / 16.0;
      const auto outer = [&](double phi) {
        const double cp = std::cos(phi);
        const double sp = std::sin(phi);
        return integrate_pieces(
            [&](double z) {
              const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
              return g(Vec3{r * cp, r * sp, z});
            },
            meridian_breaks(spec, theta, phi, 0.0, 1.0), inner_opts);
      };
      // One panel per tooth/gap position keeps the boundary kinks at panel ends.
      for (int i = 0; i < 2 * spec.k; ++i) {
        integral += integrate(outer, (i - 0.5) * pi / spec.k, (i + 0.5) * pi / spec.k, opts);
      }
      break;
    }
    case RegionKind::Tooth:
    case RegionKind::Gap:
      if (spec.cog_height == 0.0) return 0.0;
      if (positive_mod(a.label, 2) != (a.kind == RegionKind::Gap ? 1 : 0)) {
        fail(ErrorCode::InvalidArgument, "teeth have even labels and gaps odd ones");
      }
      integral = integrate_cog(spec, theta, positive_mod(a.label, 2 * spec.k), g, false, opts);
      break;
    default:
      fail(ErrorCode::InvalidArgument, "source region must be H, a tooth or a gap");
  }
  return integral / (2.0 * pi);
}

double cogged_success_probability(const CoggedLawnSpec& spec, double theta,
                                  const QuadratureOptions& opts) {
  const double h2 = 1.0 - theta / pi;
  if (spec.cog_height == 0.0) return h2;
  // f_L + f_H - 1 over T_0; the tooth is mirror symmetric about its meridian.
  const auto g = [&](const Vec3& p) {
    const RegionArcs arcs = jump_circle_region_arcs(p, theta, spec);
    return arcs.lawn() + arcs.hemisphere() - 1.0;
  };
  const double half = integrate_cog(spec, theta, 0, g, true, opts);
  return h2 + spec.k / pi * 2.0 * half;
}

double success_deficit(int q, int k, double height, const QuadratureOptions& opts) {
  const CoggedLawnSpec spec = build_cogged_lawn(q, k, height);
  // The hemisphere term cancels exactly.
  if (height == 0.0) return 0.0;
  const double theta = spec.jump();
  return cogged_success_probability(spec, theta, opts) - (1.0 - theta / pi);
}

std::vector<DeficitRow> deficit_scan(int q, int k, double lo, double hi, int points,
                                     const QuadratureOptions& opts) {
  if (points < 1) fail(ErrorCode::InvalidArgument, "scan needs at least one point");
  build_cogged_lawn(q, k, std::max(lo, hi));
  std::vector<DeficitRow> rows(points);
  std::vector<std::optional<Error>> errors(points);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < points; ++i) {
    const double h = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    rows[i] = {q, k, h, 0.0};
    try {
      rows[i].deficit = success_deficit(q, k, h, opts);
    } catch (const Error& e) {
      errors[i] = e;
    }
  }
  for (const auto& e : errors)
    if (e) throw *e;
  return rows;
}

void write_deficit_csv(const std::filesystem::path& path, const std::vector<DeficitRow>& rows) {
  std::string out = "q,k,height,deficit\n";
  char buf[96];
  for (const DeficitRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.15g,%.15g\n", r.q, r.k, r.height, r.deficit);
    out += buf;
  }
  write_file_atomic(path, out);
}

}  // namespace grasshopper
