#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "grasshopper/error.hpp"
#include "grasshopper/lawn.hpp"

using namespace grasshopper;
namespace fs = std::filesystem;

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

Vec3 random_axis(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return normalized(Vec3{g(rng), g(rng), g(rng)});
}

// Every valid move for the setup, drawn at random.
Move random_move(const LawnState& s, std::mt19937_64& rng) {
  const std::size_t n = s.size();
  std::uniform_int_distribution<std::uint32_t> site(0, static_cast<std::uint32_t>(n - 1));
  switch (s.setup()) {
    case SetupKind::AntipodalOneLawn: return Move::pair_flip(1, site(rng));
    case SetupKind::AntipodalTwoLawn: return Move::pair_flip((rng() & 1u) ? 2 : 1, site(rng));
    case SetupKind::NonAntipodalOneLawn: {
      std::uint32_t on = site(rng);
      while (!s.spins(1)[on]) on = site(rng);
      std::uint32_t off = site(rng);
      while (s.spins(1)[off]) off = site(rng);
      return Move::exchange(on, off);
    }
  }
  return {};
}

}  // namespace

TEST_CASE("octahedron random lawns") {
  const auto oct = std::make_shared<const SphericalGrid>(with_default_antipodes(SphericalGrid(
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}, GridKind::Custom)));
  const auto a = new_random_lawn(oct, SetupKind::AntipodalOneLawn, 1);
  CHECK(a.area(1) == 3);
  for (std::uint32_t i = 0; i < 6; i += 2) CHECK(a.spins(1)[i] + a.spins(1)[i + 1] == 1);
  CHECK(new_random_lawn(oct, SetupKind::AntipodalOneLawn, 1).spins(1) == a.spins(1));
  const auto h = hemisphere_lawn(oct, {0, 0, 1}, SetupKind::AntipodalOneLawn);
  CHECK(h.area(1) == 3);
  CHECK(h.spins(1)[4] == 1);
  const auto hn = hemisphere_lawn(oct, {0, 0, 1}, SetupKind::NonAntipodalOneLawn);
  CHECK(hn.area(1) == 3);
}

TEST_CASE("random lawn constraints") {
  const auto g = healpix(2);
  const auto s = new_random_lawn(g, SetupKind::NonAntipodalOneLawn, 3);
  CHECK(s.area(1) == g->size() / 2);
  const auto t = new_random_lawn(g, SetupKind::AntipodalTwoLawn, 3);
  CHECK(t.area(2) == g->size() / 2);
  CHECK(t.spins(1) != t.spins(2));

  std::vector<Vec3> odd = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto og = std::make_shared<const SphericalGrid>(std::move(odd), GridKind::Custom);
  CHECK(code_of([&] { new_random_lawn(og, SetupKind::NonAntipodalOneLawn, 1); }) ==
        ErrorCode::OddSiteCount);
  const auto raw = std::make_shared<const SphericalGrid>(generate_healpix(2));
  CHECK(code_of([&] { new_random_lawn(raw, SetupKind::AntipodalOneLawn, 1); }) ==
        ErrorCode::NoAntipodalStructure);
}

TEST_CASE("hemisphere axis reversal gives the complement") {
  const auto g = healpix(8);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const Vec3 a = random_axis(rng);
    for (auto setup : {SetupKind::AntipodalOneLawn, SetupKind::NonAntipodalOneLawn}) {
      const auto up = hemisphere_lawn(g, a, setup);
      const auto down = hemisphere_lawn(g, -a, setup);
      for (std::size_t i = 0; i < g->size(); ++i) CHECK(up.spins(1)[i] + down.spins(1)[i] == 1);
    }
  }
}

TEST_CASE("hemisphere balancing touches O(sqrt N) sites") {
  const auto g = healpix(16);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const Vec3 a = random_axis(rng);
    const auto h = hemisphere_lawn(g, a, SetupKind::NonAntipodalOneLawn);
    std::size_t toggled = 0;
    for (std::size_t i = 0; i < g->size(); ++i)
      toggled += (dot(g->point(i), a) > 0.0) != (h.spins(1)[i] == 1);
    CHECK(toggled <= 2 * static_cast<std::size_t>(std::sqrt(g->size())));
  }
}

TEST_CASE("antipodal lawns at a right-angle jump score one half") {
  const auto& g = grid12k();
  const auto t = build_shell_table(g, pi / 2, true);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = new_random_lawn(g, SetupKind::AntipodalOneLawn, seed);
    CHECK(std::abs(evaluate_probability(s, t) - 0.5) < 5e-3);
    // Pair flips cannot change the score on an exact great circle.
    for (std::uint32_t i = 0; i < g->size(); i += 1013)
      CHECK(std::abs(delta_probability(s, Move::pair_flip(1, i), t)) < 1e-3 * g->spacing());
  }
}

TEST_CASE("hemisphere lawn reproduces 1 - theta/pi") {
  const auto& g = grid12k();
  const auto t = build_shell_table(g, 0.3 * pi, true);
  std::mt19937_64 rng(7);
  double sum = 0.0;
  double sum2 = 0.0;
  const int axes = 30;
  for (int k = 0; k < axes; ++k) {
    const double p = evaluate_probability(hemisphere_lawn(g, random_axis(rng), SetupKind::AntipodalOneLawn), t);
    sum += p;
    sum2 += p * p;
  }
  const double mean = sum / axes;
  CHECK(std::abs(mean - 0.7) < 1e-3);
  CHECK(std::sqrt(std::max(0.0, sum2 / axes - mean * mean)) < 2e-3);
}

TEST_CASE("orientation spread shrinks with N") {
  const double theta = 0.4 * pi;
  double prev = 1.0;
  for (int n_side : {8, 16, 32}) {
    const auto g = healpix(n_side);
    const auto t = build_shell_table(g, theta, true);
    std::mt19937_64 rng(11);
    double sum = 0.0;
    double sum2 = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double p = evaluate_probability(hemisphere_lawn(g, random_axis(rng), SetupKind::AntipodalOneLawn), t);
      sum += p;
      sum2 += p * p;
    }
    const double sd = std::sqrt(std::max(0.0, sum2 / 40 - (sum / 40) * (sum / 40)));
    CHECK(sd < prev);
    prev = sd;
  }
}

TEST_CASE("kernel normalization: an empty second lawn catches every jump") {
  const auto& g = grid12k();
  const auto t = build_shell_table(g, 0.3 * pi, true);
  const auto s = new_random_lawn(g, SetupKind::AntipodalOneLawn, 2);
  const auto z = LawnState::unchecked(g, SetupKind::AntipodalTwoLawn, s.spins(1), Spins(g->size(), 0));
  CHECK(std::abs(evaluate_probability(z, t) - 1.0) < 1e-2);
}

TEST_CASE("two-lawn complement duality between theta and pi - theta") {
  const auto& g = grid12k();
  const auto a = build_shell_table(g, 0.27 * pi, true);
  const auto b = build_shell_table(g, 0.73 * pi, true);
  for (std::uint64_t seed : {1, 2}) {
    const auto s = new_random_lawn(g, SetupKind::AntipodalTwoLawn, seed);
    Spins comp = s.spins(2);
    for (auto& v : comp) v ^= 1u;
    const LawnState c(g, SetupKind::AntipodalTwoLawn, s.spins(1), comp);
    CHECK(std::abs(evaluate_probability(s, a) - evaluate_probability(c, b)) < 2e-3);
  }
}

TEST_CASE("deltas match full re-evaluation for all setups") {
  const auto g = healpix(8);
  const auto t = build_shell_table(g, 0.35 * pi, true);
  std::mt19937_64 rng(13);
  for (auto setup : {SetupKind::AntipodalOneLawn, SetupKind::AntipodalTwoLawn,
                     SetupKind::NonAntipodalOneLawn}) {
    auto s = new_random_lawn(g, setup, 4);
    const double start = evaluate_probability(s, t);
    double p = start;
    double path = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Move m = random_move(s, rng);
      const double d = delta_probability(s, m, t);
      apply_move(s, m);
      const double after = evaluate_probability(s, t);
      CHECK(std::abs(p + d - after) <= 1e-12 * std::max(1.0, std::abs(after)));
      const double back = delta_probability(s, inverse(m), t);
      CHECK(std::abs(d + back) < 1e-12);
      p = after;
      path += d;
    }
    CHECK(std::abs(start + path - p) < 1e-9);
  }
}

TEST_CASE("move validity and invariants under fuzzing") {
  const auto g = healpix(4);
  std::mt19937_64 rng(17);
  for (auto setup : {SetupKind::AntipodalOneLawn, SetupKind::AntipodalTwoLawn,
                     SetupKind::NonAntipodalOneLawn}) {
    auto s = new_random_lawn(g, setup, 8);
    const auto original = s.spins(1);
    for (int k = 0; k < 100000; ++k) apply_move(s, random_move(s, rng));
    CHECK_NOTHROW(s.validate());
    if (setup != SetupKind::NonAntipodalOneLawn) {
      auto twice = s;
      apply_move(twice, Move::pair_flip(1, 3));
      apply_move(twice, Move::pair_flip(1, 3));
      CHECK(twice.spins(1) == s.spins(1));
    }
  }
  auto a = new_random_lawn(g, SetupKind::AntipodalOneLawn, 1);
  CHECK(code_of([&] { apply_move(a, Move::exchange(0, 1)); }) == ErrorCode::InvalidMove);
  CHECK(code_of([&] { apply_move(a, Move::pair_flip(2, 0)); }) == ErrorCode::InvalidMove);
  auto n = new_random_lawn(g, SetupKind::NonAntipodalOneLawn, 1);
  CHECK(code_of([&] { apply_move(n, Move::pair_flip(1, 0)); }) == ErrorCode::InvalidMove);
  std::uint32_t on = 0;
  while (!n.spins(1)[on]) ++on;
  CHECK(code_of([&] { apply_move(n, Move::exchange(on, on)); }) == ErrorCode::InvalidMove);
}

TEST_CASE("grid mismatch is detected") {
  const auto s = new_random_lawn(healpix(4), SetupKind::AntipodalOneLawn, 1);
  const auto t = build_shell_table(healpix(8), 0.4 * pi, true);
  CHECK(code_of([&] { evaluate_probability(s, t); }) == ErrorCode::GridMismatch);
}

TEST_CASE("theta = pi closed form") {
  const auto g = healpix(4);
  CHECK(probability_at_pi(new_random_lawn(g, SetupKind::AntipodalOneLawn, 2)) == 0.0);
  const auto h = hemisphere_lawn(g, {0, 0, 1}, SetupKind::AntipodalTwoLawn);
  CHECK(probability_at_pi(h) == 1.0);
  CHECK(code_of([&] { probability_prefactor(g->size(), g->spacing(), pi); }) ==
        ErrorCode::JumpUnresolvable);
}

TEST_CASE("Monte Carlo oracle agrees with the functional") {
  const auto& g = grid12k();
  const double theta = 0.3 * pi;
  const auto h = hemisphere_lawn(g, normalized(Vec3{0.2, 0.5, 0.8}), SetupKind::AntipodalOneLawn);
  const auto mc = mc_oracle_probability(h, theta, 1000000, 3);
  CHECK(std::abs(mc.estimate - 0.7) < 3 * mc.std_error);

  const auto r = new_random_lawn(g, SetupKind::AntipodalOneLawn, 5);
  const auto mc2 = mc_oracle_probability(r, pi / 2, 1000000, 4);
  CHECK(std::abs(mc2.estimate - 0.5) < 3 * mc2.std_error);

  const auto at_pi = mc_oracle_probability(r, pi, 2000, 5);
  CHECK(at_pi.estimate == 0.0);
}

TEST_CASE("lawn files round trip") {
  const auto g = healpix(4);
  const auto t = build_shell_table(g, 0.4 * pi, true);
  for (auto setup : {SetupKind::AntipodalOneLawn, SetupKind::AntipodalTwoLawn,
                     SetupKind::NonAntipodalOneLawn}) {
    const auto s = new_random_lawn(g, setup, 21);
    const fs::path p = fs::temp_directory_path() / "gh_lawn_roundtrip.txt";
    write_lawn(p, s, 0.4 * pi, g->hash(), Checkpoint{1e-4, 12, 0.75, 21});
    double theta = 0.0;
    const auto back = read_lawn(p, g, &theta);
    CHECK(theta == 0.4 * pi);
    CHECK(back.setup() == setup);
    CHECK(back.spins(1) == s.spins(1));
    CHECK(back.spins(2) == s.spins(2));
    CHECK(evaluate_probability(back, t) == evaluate_probability(s, t));
    const auto f = read_lawn_file(p);
    REQUIRE(f.checkpoint.has_value());
    CHECK(f.checkpoint->sweep == 12);
    CHECK(f.checkpoint->best_probability == 0.75);
    CHECK(code_of([&] { read_lawn(p, healpix(8)); }) == ErrorCode::GridMismatch);
  }
}
