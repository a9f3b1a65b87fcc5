#include "grasshopper/sphere_grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "grasshopper/error.hpp"
#include "grasshopper/io.hpp"
#include "grasshopper/site_index.hpp"

namespace grasshopper {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnitTolerance = 1e-12;
constexpr double kLoadUnitTolerance = 1e-9;

std::string fnv1a_hex(std::span<const Vec3> points) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Vec3& p : points) {
    for (double c : {p.x, p.y, p.z}) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &c, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate_antipodes(std::span<const Vec3> points, const AntipodeMap& map) {
  const std::size_t n = points.size();
  if (map.pairs.size() != n) {
    fail(ErrorCode::NoAntipodalStructure, "antipode map size does not match site count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t j = map.pairs[i];
    if (j >= n || j == i || map.pairs[j] != i) {
      fail(ErrorCode::NoAntipodalStructure,
           "antipode map is not a fixed-point-free involution at site " + std::to_string(i));
    }
    if (map.tolerance == 0.0) {
      if (!(points[j] == -points[i])) {
        fail(ErrorCode::NoAntipodalStructure, "exact antipode pairing violated at site " +
                                                  std::to_string(i));
      }
    } else if (spherical_angle(-points[i], points[j]) > map.tolerance) {
      fail(ErrorCode::NoAntipodalStructure,
           "antipode deviation exceeds tolerance at site " + std::to_string(i));
    }
  }
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
  return s.substr(start);
}

}  // namespace

std::string_view to_string(GridKind kind) {
  switch (kind) {
    case GridKind::TDesign: return "tdesign";
    case GridKind::Healpix: return "healpix";
    case GridKind::Goldberg: return "goldberg";
    case GridKind::Coulomb: return "coulomb";
    case GridKind::Custom: return "custom";
  }
  return "custom";
}

GridKind parse_grid_kind(std::string_view token) {
  if (token == "tdesign") return GridKind::TDesign;
  if (token == "healpix") return GridKind::Healpix;
  if (token == "goldberg") return GridKind::Goldberg;
  if (token == "coulomb") return GridKind::Coulomb;
  if (token == "custom") return GridKind::Custom;
  fail(ErrorCode::MalformedFile, "unknown grid kind '" + std::string(token) + "'");
}

SphericalGrid::SphericalGrid(std::vector<Vec3> points, GridKind kind,
                             std::optional<AntipodeMap> antipodes)
    : points_(std::move(points)), kind_(kind) {
  if (points_.empty()) fail(ErrorCode::InvalidArgument, "grid must contain at least one site");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (std::abs(norm(points_[i]) - 1.0) > kUnitTolerance) {
      fail(ErrorCode::NonUnitPoint, "site " + std::to_string(i) + " is not of unit length");
    }
  }
  std::vector<Vec3> sorted = points_;
  std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorCode::DuplicateSite, "grid contains duplicate sites");
  }
  spacing_ = std::sqrt(4.0 * kPi / static_cast<double>(points_.size()));
  if (antipodes) {
    validate_antipodes(points_, *antipodes);
    antipodes_ = std::move(antipodes);
  }
  hash_ = fnv1a_hex(points_);
}

const AntipodeMap& SphericalGrid::antipodes() const {
  if (!antipodes_) fail(ErrorCode::NoAntipodalStructure, "grid has no antipode map");
  return *antipodes_;
}

SphericalGrid SphericalGrid::with_antipodes(AntipodeMap map) const {
  return SphericalGrid(points_, kind_, std::move(map));
}

double default_antipode_tolerance(GridKind kind, double spacing) {
  switch (kind) {
    case GridKind::Healpix:
    case GridKind::Goldberg: return 1e-6 * spacing;
    default: return 1e-9;
  }
}

AntipodeMap build_antipode_map(const SphericalGrid& grid, double tol) {
  if (tol < 0.0) fail(ErrorCode::InvalidArgument, "antipode tolerance must be non-negative");
  const SiteIndex index(grid);
  AntipodeMap map;
  map.pairs.resize(grid.size());
  for (std::uint32_t i = 0; i < grid.size(); ++i) {
    const Vec3 target = -grid.point(i);
    const std::uint32_t j = index.nearest(target);
    const double deviation = spherical_angle(target, grid.point(j));
    if (deviation > tol) {
      fail(ErrorCode::NoAntipodalStructure,
           "site " + std::to_string(i) + " has no antipodal partner within tolerance");
    }
    map.pairs[i] = j;
    map.tolerance = std::max(map.tolerance, deviation);
  }
  for (std::uint32_t i = 0; i < grid.size(); ++i) {
    const std::uint32_t j = map.pairs[i];
    if (j == i || map.pairs[j] != i) {
      fail(ErrorCode::NoAntipodalStructure, "antipodal matching is not an involution");
    }
  }
  // Validation treats a zero tolerance as "bitwise exact negation"; keep a
  // positive bound so near-exact float pairs still validate.
  map.tolerance = std::max(map.tolerance, std::numeric_limits<double>::min());
  return map;
}

SphericalGrid with_default_antipodes(const SphericalGrid& grid) {
  if (grid.has_antipodes()) return grid;
  try {
    return grid.with_antipodes(
        build_antipode_map(grid, default_antipode_tolerance(grid.kind(), grid.spacing())));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoAntipodalStructure) throw;
    return grid;
  }
}

SphericalGrid generate_healpix(int n_side) {
  if (n_side < 1) fail(ErrorCode::InvalidArgument, "n_side must be >= 1");
  const long long ns = n_side;
  const long long npix = 12 * ns * ns;
  const long long ncap = 2 * ns * (ns - 1);
  const double fact = 3.0 * static_cast<double>(ns * ns);
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(npix));
  for (long long p = 0; p < npix; ++p) {
    double z = 0.0;
    double phi = 0.0;
    if (p < ncap) {
      const long long i = static_cast<long long>((1.0 + std::sqrt(1.0 + 2.0 * p)) / 2.0);
      const long long j = p - 2 * i * (i - 1) + 1;
      z = 1.0 - static_cast<double>(i * i) / fact;
      phi = kPi / (2.0 * i) * (static_cast<double>(j) - 0.5);
    } else if (p < npix - ncap) {
      const long long q = p - ncap;
      const long long i = q / (4 * ns) + ns;
      const long long j = q % (4 * ns) + 1;
      const double offset = ((i + ns) & 1) ? 1.0 : 0.5;
      z = 4.0 / 3.0 - 2.0 * static_cast<double>(i) / (3.0 * ns);
      phi = kPi / (2.0 * ns) * (static_cast<double>(j) - offset);
    } else {
      const long long q = npix - p;
      const long long i = static_cast<long long>((1.0 + std::sqrt(2.0 * q - 1.0)) / 2.0);
      const long long j = 4 * i + 1 - (q - 2 * i * (i - 1));
      z = -1.0 + static_cast<double>(i * i) / fact;
      phi = kPi / (2.0 * i) * (static_cast<double>(j) - 0.5);
    }
    const double s = std::sqrt((1.0 - z) * (1.0 + z));
    points.push_back({s * std::cos(phi), s * std::sin(phi), z});
  }
  return SphericalGrid(std::move(points), GridKind::Healpix);
}

namespace {

struct Subdivision {
  std::vector<Vec3> points;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

Subdivision subdivide_icosahedron(int f) {
  if (f < 1) fail(ErrorCode::InvalidArgument, "frequency must be >= 1");
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::array<Vec3, 12> verts = {{{0, 1, g},  {0, -1, g},  {0, 1, -g},  {0, -1, -g},
                                       {1, g, 0},  {-1, g, 0},  {1, -g, 0},  {-1, -g, 0},
                                       {g, 0, 1},  {-g, 0, 1},  {g, 0, -1},  {-g, 0, -1}}};
  std::vector<std::array<int, 3>> faces;
  for (int a = 0; a < 12; ++a)
    for (int b = a + 1; b < 12; ++b)
      for (int c = b + 1; c < 12; ++c) {
        const auto edge = [&](int u, int v) {
          return std::abs(norm(verts[u] - verts[v]) - 2.0) < 1e-9;
        };
        if (edge(a, b) && edge(b, c) && edge(a, c)) faces.push_back({a, b, c});
      }

  Subdivision out;
  // Lattice points are keyed by their exact integer barycentric weights so
  // that points shared between faces get bit-identical coordinates.
  std::map<std::array<std::pair<int, int>, 3>, std::uint32_t> ids;
  const auto point_id = [&](const std::array<int, 3>& face, int i, int j) {
    const int k = f - i - j;
    std::array<std::pair<int, int>, 3> key = {
        {{face[0], k}, {face[1], i}, {face[2], j}}};
    for (auto& kv : key)
      if (kv.second == 0) kv.first = 99;
    std::sort(key.begin(), key.end());
    auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(out.points.size()));
    if (inserted) {
      Vec3 acc;
      for (const auto& [v, w] : key)
        if (w != 0) acc += verts[v] * static_cast<double>(w);
      out.points.push_back(normalized(acc));
    }
    return it->second;
  };

  for (const auto& face : faces) {
    for (int i = 0; i < f; ++i) {
      for (int j = 0; i + j < f; ++j) {
        out.triangles.push_back(
            {point_id(face, i, j), point_id(face, i + 1, j), point_id(face, i, j + 1)});
        if (i + j + 2 <= f) {
          out.triangles.push_back({point_id(face, i + 1, j), point_id(face, i + 1, j + 1),
                                   point_id(face, i, j + 1)});
        }
      }
    }
  }
  return out;
}

}  // namespace

SphericalGrid generate_goldberg(int frequency) {
  return SphericalGrid(subdivide_icosahedron(frequency).points, GridKind::Goldberg);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> goldberg_edges(int frequency) {
  const Subdivision sub = subdivide_icosahedron(frequency);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& t : sub.triangles) {
    for (int e = 0; e < 3; ++e) {
      std::uint32_t a = t[e];
      std::uint32_t b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

double coulomb_energy(std::span<const Vec3> points) {
  double e = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b) e += 1.0 / norm(points[a] - points[b]);
  return e;
}

namespace {

std::vector<Vec3> expand_pairs(const std::vector<Vec3>& half) {
  std::vector<Vec3> full;
  full.reserve(2 * half.size());
  for (const Vec3& p : half) {
    full.push_back(p);
    full.push_back(-p);
  }
  return full;
}

}  // namespace

CoulombResult generate_coulomb(int n_pairs, int max_iters, std::uint64_t seed,
                               double gradient_tol) {
  if (n_pairs < 2) fail(ErrorCode::InvalidArgument, "n_pairs must be >= 2");
  if (max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Vec3> half(static_cast<std::size_t>(n_pairs));
  for (Vec3& p : half) p = normalized(Vec3{gauss(rng), gauss(rng), gauss(rng)});

  const auto gradient = [&](const std::vector<Vec3>& pts, double& grad_norm) {
    const std::vector<Vec3> full = expand_pairs(pts);
    std::vector<Vec3> g(pts.size());
    double sq = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      Vec3 acc;
      for (std::size_t b = 0; b < full.size(); ++b) {
        if (b / 2 == k) continue;  // partner distance is fixed at 2
        const Vec3 d = pts[k] - full[b];
        const double r = norm(d);
        acc -= d / (r * r * r);
      }
      // Each parameter drives two mirrored charges with identical force.
      acc = acc * 2.0;
      acc -= pts[k] * dot(acc, pts[k]);
      g[k] = acc;
      sq += dot(acc, acc);
    }
    grad_norm = std::sqrt(sq);
    return g;
  };

  CoulombResult result{SphericalGrid({{0, 0, 1}}, GridKind::Coulomb), false, 0.0, {}};
  double energy = coulomb_energy(expand_pairs(half));
  result.energy_history.push_back(energy);
  double step = 0.1 / static_cast<double>(n_pairs);
  double grad_norm = 0.0;
  auto grad = gradient(half, grad_norm);
  for (int it = 0; it < max_iters && grad_norm > gradient_tol; ++it) {
    std::vector<Vec3> trial(half.size());
    for (std::size_t k = 0; k < half.size(); ++k) trial[k] = normalized(half[k] - grad[k] * step);
    const double e_trial = coulomb_energy(expand_pairs(trial));
    if (e_trial <= energy) {
      half = std::move(trial);
      energy = e_trial;
      result.energy_history.push_back(energy);
      grad = gradient(half, grad_norm);
      step *= 1.2;
    } else {
      step *= 0.5;
      if (step < 1e-300) break;
    }
  }
  result.converged = grad_norm <= gradient_tol;
  result.gradient_norm = grad_norm;

  AntipodeMap map;
  map.pairs.resize(2 * half.size());
  for (std::uint32_t k = 0; k < half.size(); ++k) {
    map.pairs[2 * k] = 2 * k + 1;
    map.pairs[2 * k + 1] = 2 * k;
  }
  map.tolerance = 0.0;
  result.grid = SphericalGrid(expand_pairs(half), GridKind::Coulomb, std::move(map));
  return result;
}

namespace {

SphericalGrid parse_point_file(const std::filesystem::path& path, std::optional<GridKind> kind) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open grid file " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedFile, "empty grid file");
  line = trim(line);

  long long n = -1;
  std::optional<GridKind> header_kind;
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("N=", 0) == 0) {
        const char* b = tok.data() + 2;
        const char* e = tok.data() + tok.size();
        auto [ptr, ec] = std::from_chars(b, e, n);
        if (ec != std::errc() || ptr != e) n = -1;
      } else if (tok.rfind("kind=", 0) == 0) {
        header_kind = parse_grid_kind(tok.substr(5));
      }
    }
  }
  if (n <= 0 || !header_kind) fail(ErrorCode::MalformedFile, "bad grid header: '" + line + "'");

  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n));
  while (static_cast<long long>(points.size()) < n && std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream rs(line);
    Vec3 p;
    std::string extra;
    if (!(rs >> p.x >> p.y >> p.z) || (rs >> extra)) {
      fail(ErrorCode::MalformedFile, "bad grid row: '" + line + "'");
    }
    const double r = norm(p);
    if (std::abs(r - 1.0) > kLoadUnitTolerance) {
      fail(ErrorCode::NonUnitPoint,
           "row " + std::to_string(points.size()) + " has norm " + std::to_string(r));
    }
    // Rows already unit to rounding keep their exact bits so files round-trip.
    points.push_back(std::abs(r - 1.0) <= 1e-14 ? p : p / r);
  }
  if (static_cast<long long>(points.size()) != n) {
    fail(ErrorCode::MalformedFile, "grid file declares N=" + std::to_string(n) + " but has " +
                                       std::to_string(points.size()) + " rows");
  }

  std::optional<AntipodeMap> antipodes;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line != "ANTIPODES") fail(ErrorCode::MalformedFile, "unexpected trailing line: " + line);
    AntipodeMap map;
    map.pairs.assign(static_cast<std::size_t>(n), 0);
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    long long rows = 0;
    while (rows < n && std::getline(in, line)) {
      line = trim(line);
      if (line.empty()) continue;
      std::istringstream rs(line);
      long long i = -1;
      long long j = -1;
      if (!(rs >> i >> j) || i < 0 || j < 0 || i >= n || j >= n || seen[i]) {
        fail(ErrorCode::MalformedFile, "bad antipode row: '" + line + "'");
      }
      seen[i] = true;
      map.pairs[i] = static_cast<std::uint32_t>(j);
      ++rows;
    }
    if (rows != n) fail(ErrorCode::MalformedFile, "antipode block has too few rows");
    double worst = 0.0;
    for (long long i = 0; i < n; ++i)
      worst = std::max(worst, spherical_angle(-points[i], points[map.pairs[i]]));
    map.tolerance = std::max(worst, std::numeric_limits<double>::min());
    antipodes = std::move(map);
    break;
  }
  const GridKind k = kind.value_or(*header_kind);
  if (antipodes) {
    const double allowed = default_antipode_tolerance(k, std::sqrt(4.0 * kPi / n));
    if (antipodes->tolerance > allowed) {
      fail(ErrorCode::NoAntipodalStructure, "antipode block deviates beyond tolerance");
    }
  }
  return SphericalGrid(std::move(points), k, std::move(antipodes));
}

}  // namespace

SphericalGrid load_point_set(const std::filesystem::path& path, GridKind kind) {
  return parse_point_file(path, kind);
}

SphericalGrid load_point_set(const std::filesystem::path& path) {
  return parse_point_file(path, std::nullopt);
}

void write_point_set(const SphericalGrid& grid, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "N=" << grid.size() << " kind=" << to_string(grid.kind()) << '\n';
  char buf[128];
  for (const Vec3& p : grid.points()) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x, p.y, p.z);
    out << buf;
  }
  if (grid.has_antipodes()) {
    out << "ANTIPODES\n";
    const auto& pairs = grid.antipodes().pairs;
    for (std::size_t i = 0; i < pairs.size(); ++i) out << i << ' ' << pairs[i] << '\n';
  }
  write_file_atomic(path, out.str());
}

SphericalGrid make_grid(std::string_view spec, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string family(spec.substr(0, colon));
  const auto int_arg = [&](std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(ErrorCode::BadFlag, "bad grid spec '" + std::string(spec) + "'");
    }
    return v;
  };
  if (colon != std::string_view::npos) {
    const std::string_view arg = spec.substr(colon + 1);
    if (family == "healpix") return with_default_antipodes(generate_healpix(int_arg(arg)));
    if (family == "goldberg") return with_default_antipodes(generate_goldberg(int_arg(arg)));
    if (family == "coulomb") {
      const auto second = arg.find(':');
      const int pairs = int_arg(arg.substr(0, second));
      const int iters = second == std::string_view::npos ? 2000 : int_arg(arg.substr(second + 1));
      return generate_coulomb(pairs, iters, seed).grid;
    }
    if (family == "file") return with_default_antipodes(load_point_set(std::string(arg)));
  }
  return with_default_antipodes(load_point_set(std::string(spec)));
}

}  // namespace grasshopper
