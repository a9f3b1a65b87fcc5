#include "grasshopper/lawn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "grasshopper/error.hpp"
#include "grasshopper/io.hpp"
#include "grasshopper/kernels.hpp"
#include "grasshopper/site_index.hpp"

namespace grasshopper {

namespace {

std::size_t count_ones(const Spins& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), std::uint8_t{1}));
}

void require_same_grid(const LawnState& state, const ShellTable& shells) {
  if (state.grid_ptr() != shells.grid_ptr() && state.grid().hash() != shells.grid().hash()) {
    fail(ErrorCode::GridMismatch, "lawn and shell table were built on different grids");
  }
}

std::string spins_line(const Spins& s) {
  std::string line(s.size(), '0');
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i]) line[i] = '1';
  return line;
}

}  // namespace

std::string_view to_string(SetupKind setup) {
  switch (setup) {
    case SetupKind::AntipodalOneLawn: return "antipodal-one";
    case SetupKind::AntipodalTwoLawn: return "antipodal-two";
    case SetupKind::NonAntipodalOneLawn: return "non-antipodal";
  }
  return "antipodal-one";
}

SetupKind parse_setup(std::string_view token) {
  if (token == "antipodal-one") return SetupKind::AntipodalOneLawn;
  if (token == "antipodal-two") return SetupKind::AntipodalTwoLawn;
  if (token == "non-antipodal") return SetupKind::NonAntipodalOneLawn;
  fail(ErrorCode::BadFlag, "unknown setup '" + std::string(token) + "'");
}

LawnState::LawnState(GridPtr grid, SetupKind setup, Spins spins1, std::optional<Spins> spins2) {
  *this = unchecked(std::move(grid), setup, std::move(spins1), std::move(spins2));
  validate();
}

LawnState LawnState::unchecked(GridPtr grid, SetupKind setup, Spins spins1,
                               std::optional<Spins> spins2) {
  LawnState s;
  s.grid_ = std::move(grid);
  s.setup_ = setup;
  s.spins1_ = std::move(spins1);
  if (is_two_lawn(setup)) s.spins2_ = spins2 ? std::move(*spins2) : s.spins1_;
  s.area1_ = count_ones(s.spins1_);
  s.area2_ = count_ones(s.spins2_);
  return s;
}

void LawnState::validate() const {
  const std::size_t n = grid_->size();
  if (n % 2 != 0) fail(ErrorCode::OddSiteCount, "lawns need an even number of sites");
  if (is_antipodal(setup_) && !grid_->has_antipodes()) {
    fail(ErrorCode::NoAntipodalStructure, "antipodal setup on a grid without antipode map");
  }
  const int lawns = is_two_lawn(setup_) ? 2 : 1;
  for (int k = 1; k <= lawns; ++k) {
    const Spins& s = spins(k);
    if (s.size() != n) fail(ErrorCode::InvalidArgument, "spin vector length differs from N");
    for (auto v : s)
      if (v > 1) fail(ErrorCode::InvalidArgument, "spins must be 0 or 1");
    if (count_ones(s) != area(k) || area(k) != n / 2) {
      fail(ErrorCode::InvalidArgument, "lawn " + std::to_string(k) + " does not cover N/2 sites");
    }
    if (is_antipodal(setup_)) {
      for (std::size_t i = 0; i < n; ++i) {
        if (s[i] + s[grid_->antipode(i)] != 1) {
          fail(ErrorCode::InvalidArgument,
               "lawn " + std::to_string(k) + " violates antipodality at site " + std::to_string(i));
        }
      }
    }
  }
}

void LawnState::toggle(int lawn, std::uint32_t i) {
  const bool second = lawn == 2 && is_two_lawn(setup_);
  Spins& s = second ? spins2_ : spins1_;
  std::size_t& area = second ? area2_ : area1_;
  s[i] ^= 1u;
  if (s[i]) {
    ++area;
  } else {
    --area;
  }
}

Move inverse(const Move& m) {
  if (m.kind == MoveKind::AntipodalPairFlip) return Move::pair_flip(m.lawn, m.site);
  return Move::exchange(m.site_off, m.site);
}

void check_move(const LawnState& state, const Move& m) {
  const std::size_t n = state.size();
  if (m.kind == MoveKind::AntipodalPairFlip) {
    if (!is_antipodal(state.setup())) fail(ErrorCode::InvalidMove, "pair flips need an antipodal setup");
    if (m.lawn != 1 && !(m.lawn == 2 && is_two_lawn(state.setup()))) {
      fail(ErrorCode::InvalidMove, "no lawn " + std::to_string(m.lawn) + " in this setup");
    }
    if (m.site >= n) fail(ErrorCode::InvalidMove, "site index out of range");
    return;
  }
  if (state.setup() != SetupKind::NonAntipodalOneLawn) {
    fail(ErrorCode::InvalidMove, "exchange flips need the non-antipodal setup");
  }
  if (m.site >= n || m.site_off >= n || m.site == m.site_off) {
    fail(ErrorCode::InvalidMove, "exchange sites invalid");
  }
  const Spins& s = state.spins(1);
  if (s[m.site] != 1 || s[m.site_off] != 0) {
    fail(ErrorCode::InvalidMove, "exchange must turn a 1-site off and a 0-site on");
  }
}

LawnState new_random_lawn(GridPtr grid, SetupKind setup, std::uint64_t seed) {
  const std::size_t n = grid->size();
  if (n % 2 != 0) fail(ErrorCode::OddSiteCount, "lawns need an even number of sites");
  if (is_antipodal(setup) && !grid->has_antipodes()) {
    fail(ErrorCode::NoAntipodalStructure, "antipodal setup on a grid without antipode map");
  }
  std::mt19937_64 rng(seed);
  const auto antipodal_lawn = [&] {
    Spins s(n, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t j = grid->antipode(i);
      if (i < j) s[(rng() & 1u) ? i : j] = 1;
    }
    return s;
  };
  if (setup == SetupKind::NonAntipodalOneLawn) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t k = n - 1; k > 0; --k) {
      std::swap(order[k], order[static_cast<std::size_t>(rng() % (k + 1))]);
    }
    Spins s(n, 0);
    for (std::size_t k = 0; k < n / 2; ++k) s[order[k]] = 1;
    return LawnState(std::move(grid), setup, std::move(s));
  }
  Spins s1 = antipodal_lawn();
  if (setup == SetupKind::AntipodalTwoLawn) {
    Spins s2 = antipodal_lawn();
    return LawnState(std::move(grid), setup, std::move(s1), std::move(s2));
  }
  return LawnState(std::move(grid), setup, std::move(s1));
}

LawnState hemisphere_lawn(GridPtr grid, const Vec3& axis, SetupKind setup) {
  const std::size_t n = grid->size();
  if (n % 2 != 0) fail(ErrorCode::OddSiteCount, "lawns need an even number of sites");
  const Vec3 a = normalized(axis);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = dot(grid->point(i), a);
  Spins s(n, 0);
  if (is_antipodal(setup)) {
    if (!grid->has_antipodes()) {
      fail(ErrorCode::NoAntipodalStructure, "antipodal setup on a grid without antipode map");
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t j = grid->antipode(i);
      if (i < j) s[d[i] >= d[j] ? i : j] = 1;
    }
  } else {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = d[i] > 0.0 ? 1 : 0;
      count += s[i];
    }
    const std::uint8_t from = count < n / 2 ? 0 : 1;
    std::vector<std::uint32_t> pool;
    for (std::uint32_t i = 0; i < n; ++i)
      if (s[i] == from) pool.push_back(i);
    std::sort(pool.begin(), pool.end(), [&](std::uint32_t x, std::uint32_t y) {
      const double ax = std::abs(d[x]);
      const double ay = std::abs(d[y]);
      return ax != ay ? ax < ay : x < y;
    });
    const std::size_t excess = count < n / 2 ? n / 2 - count : count - n / 2;
    for (std::size_t k = 0; k < excess; ++k) s[pool[k]] ^= 1u;
  }
  if (is_two_lawn(setup)) {
    Spins copy = s;
    return LawnState(std::move(grid), setup, std::move(s), std::move(copy));
  }
  return LawnState(std::move(grid), setup, std::move(s));
}

double probability_prefactor(std::size_t n, double h, double theta) {
  const double st = std::sin(theta);
  if (!(st > 1e-12) || theta <= 0.0 || theta >= std::numbers::pi) {
    fail(ErrorCode::JumpUnresolvable, "the discrete functional needs 0 < theta < pi");
  }
  const double dn = static_cast<double>(n);
  return 4.0 / (st * dn * dn * h);
}

double evaluate_probability(const LawnState& state, const ShellTable& shells) {
  require_same_grid(state, shells);
  const double pre = probability_prefactor(state.size(), state.grid().spacing(), shells.theta());
  const bool two = is_two_lawn(state.setup());
  return pre * kernels::omp::weighted_pair_sum(shells, state.spins(1), state.spins(two ? 2 : 1), two);
}

double evaluate_probability_direct(const LawnState& state, double theta) {
  const double pre = probability_prefactor(state.size(), state.grid().spacing(), theta);
  const bool two = is_two_lawn(state.setup());
  return pre * kernels::omp::weighted_pair_sum_direct(state.grid(), theta, state.spins(1),
                                                      state.spins(two ? 2 : 1), two);
}

double delta_probability(const LawnState& state, const Move& m, const ShellTable& shells) {
  require_same_grid(state, shells);
  check_move(state, m);
  const double pre = probability_prefactor(state.size(), state.grid().spacing(), shells.theta());

  // Flip set with signed changes d_x = new - old.
  std::uint32_t sites[2];
  double d[2];
  const Spins& own = state.spins(m.lawn);
  if (m.kind == MoveKind::AntipodalPairFlip) {
    sites[0] = m.site;
    sites[1] = state.grid().antipode(m.site);
  } else {
    sites[0] = m.site;
    sites[1] = m.site_off;
  }
  for (int k = 0; k < 2; ++k) d[k] = own[sites[k]] ? -1.0 : 1.0;

  const auto row_dot = [&](std::uint32_t x, const Spins& v, bool invert) {
    const auto nb = shells.neighbors(x);
    const auto w = shells.weights(x);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k)
      if ((v[nb[k]] != 0) != invert) acc += w[k];
    return acc;
  };

  double dq = 0.0;
  if (!is_two_lawn(state.setup())) {
    // Q = s^T W s:  dQ = 2 sum d_x F_x + sum_{x,y} d_x d_y w_xy.
    const Spins& s = state.spins(1);
    for (int k = 0; k < 2; ++k) dq += 2.0 * d[k] * row_dot(sites[k], s, false);
    dq += 2.0 * d[0] * d[1] * shells.weight(sites[0], sites[1]);
  } else if (m.lawn == 1) {
    // Q = s1^T W (1 - s2) is linear in s1.
    for (int k = 0; k < 2; ++k) dq += d[k] * row_dot(sites[k], state.spins(2), true);
  } else {
    for (int k = 0; k < 2; ++k) dq -= d[k] * row_dot(sites[k], state.spins(1), false);
  }
  return pre * dq;
}

void apply_move(LawnState& state, const Move& m) {
  check_move(state, m);
  if (m.kind == MoveKind::AntipodalPairFlip) {
    state.toggle(m.lawn, m.site);
    state.toggle(m.lawn, state.grid().antipode(m.site));
  } else {
    state.toggle(1, m.site);
    state.toggle(1, m.site_off);
  }
}

double probability_at_pi(const LawnState& state) {
  const SphericalGrid& g = state.grid();
  if (!g.has_antipodes()) fail(ErrorCode::NoAntipodalStructure, "theta = pi needs antipode pairs");
  const bool two = is_two_lawn(state.setup());
  const Spins& s1 = state.spins(1);
  const Spins& s2 = state.spins(two ? 2 : 1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    if (!s1[i]) continue;
    const bool target = two ? s2[g.antipode(i)] == 0 : s2[g.antipode(i)] == 1;
    hits += target ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(state.area(1));
}

McEstimate mc_oracle_probability(const LawnState& state, double theta, std::size_t n_samples,
                                 std::uint64_t seed) {
  if (n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  const SphericalGrid& g = state.grid();
  const SiteIndex index(g);
  const bool two = is_two_lawn(state.setup());
  const Spins& s1 = state.spins(1);
  const Spins& s2 = state.spins(two ? 2 : 1);
  std::vector<std::uint32_t> sources;
  for (std::uint32_t i = 0; i < s1.size(); ++i)
    if (s1[i]) sources.push_back(i);
  if (sources.empty()) fail(ErrorCode::InvalidArgument, "lawn 1 is empty");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vec3& p = g.point(sources[pick(rng)]);
    const Frame f = Frame::about(p);
    const double a = angle(rng);
    const Vec3 landing = p * ct + (f.e1 * std::cos(a) + f.e2 * std::sin(a)) * st;
    const std::uint32_t j = index.nearest(landing);
    const bool target = two ? s2[j] == 0 : s2[j] == 1;
    hits += target ? 1 : 0;
  }
  McEstimate out;
  const double n = static_cast<double>(n_samples);
  out.estimate = static_cast<double>(hits) / n;
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
  return out;
}

void write_lawn(const std::filesystem::path& path, const LawnState& state, double theta,
                const std::string& grid_ref, const std::optional<Checkpoint>& checkpoint) {
  std::ostringstream out;
  out << "N=" << state.size() << " theta=" << format_double(theta)
      << " setup=" << to_string(state.setup()) << " grid=" << grid_ref << '\n';
  out << spins_line(state.spins(1)) << '\n';
  if (is_two_lawn(state.setup())) out << spins_line(state.spins(2)) << '\n';
  if (checkpoint) {
    out << "T=" << format_double(checkpoint->temperature) << " sweep=" << checkpoint->sweep
        << " bestP=" << format_double(checkpoint->best_probability) << " seed=" << checkpoint->seed
        << '\n';
  }
  write_file_atomic(path, out.str());
}

namespace {

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

Spins parse_spins(const std::string& line, std::size_t n) {
  if (line.size() != n) fail(ErrorCode::MalformedFile, "spin line length differs from N");
  Spins s(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (line[i] != '0' && line[i] != '1') fail(ErrorCode::MalformedFile, "spin lines hold only 0/1");
    s[i] = static_cast<std::uint8_t>(line[i] - '0');
  }
  return s;
}

}  // namespace

LawnFile read_lawn_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open lawn file " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedFile, "empty lawn file");
  LawnFile f;
  bool have_n = false;
  bool have_theta = false;
  bool have_setup = false;
  {
    std::istringstream hs(strip_cr(line));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail(ErrorCode::MalformedFile, "bad lawn header token " + tok);
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "N") {
          f.n = std::stoull(val);
          have_n = true;
        } else if (key == "theta") {
          f.theta = std::stod(val);
          have_theta = true;
        } else if (key == "setup") {
          f.setup = parse_setup(val);
          have_setup = true;
        } else if (key == "grid") {
          f.grid_ref = val;
        }
      } catch (const std::logic_error&) {
        fail(ErrorCode::MalformedFile, "bad lawn header value " + tok);
      }
    }
  }
  if (!have_n || !have_theta || !have_setup) fail(ErrorCode::MalformedFile, "incomplete lawn header");
  if (!std::getline(in, line)) fail(ErrorCode::MalformedFile, "missing spin line");
  f.spins1 = parse_spins(strip_cr(line), f.n);
  if (is_two_lawn(f.setup)) {
    if (!std::getline(in, line)) fail(ErrorCode::MalformedFile, "missing second spin line");
    f.spins2 = parse_spins(strip_cr(line), f.n);
  }
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    Checkpoint c;
    char extra = 0;
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "T=%lf sweep=%lld bestP=%lf seed=%llu %c", &c.temperature,
                    &c.sweep, &c.best_probability, &seed, &extra) != 4) {
      fail(ErrorCode::MalformedFile, "bad lawn trailer: " + line);
    }
    c.seed = seed;
    f.checkpoint = c;
  }
  return f;
}

LawnState read_lawn(const std::filesystem::path& path, GridPtr grid, double* theta) {
  LawnFile f = read_lawn_file(path);
  if (f.n != grid->size()) fail(ErrorCode::GridMismatch, "lawn N differs from grid size");
  const bool looks_like_hash =
      f.grid_ref.size() == 16 &&
      f.grid_ref.find_first_not_of("0123456789abcdef") == std::string::npos;
  if (looks_like_hash && f.grid_ref != grid->hash()) {
    fail(ErrorCode::GridMismatch, "lawn was written for grid " + f.grid_ref);
  }
  if (theta) *theta = f.theta;
  return LawnState(std::move(grid), f.setup, std::move(f.spins1), std::move(f.spins2));
}

}  // namespace grasshopper
