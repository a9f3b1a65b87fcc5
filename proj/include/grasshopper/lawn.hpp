#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grasshopper/interaction.hpp"

namespace grasshopper {

enum class SetupKind { AntipodalOneLawn, AntipodalTwoLawn, NonAntipodalOneLawn };

/// Tokens: antipodal-one, antipodal-two, non-antipodal.
std::string_view to_string(SetupKind setup);
SetupKind parse_setup(std::string_view token);

constexpr bool is_antipodal(SetupKind s) { return s != SetupKind::NonAntipodalOneLawn; }
constexpr bool is_two_lawn(SetupKind s) { return s == SetupKind::AntipodalTwoLawn; }

using Spins = std::vector<std::uint8_t>;

/// One or two binary lawns on a grid. One-lawn setups store a single spin
/// vector; spins(2) aliases spins(1) there.
class LawnState {
 public:
  /// Validates: N even, areas N/2, antipodality where the setup demands it.
  LawnState(GridPtr grid, SetupKind setup, Spins spins1, std::optional<Spins> spins2 = {});

  /// Skips invariant checks. Only for normalization diagnostics that
  /// deliberately build out-of-constraint lawns.
  static LawnState unchecked(GridPtr grid, SetupKind setup, Spins spins1,
                             std::optional<Spins> spins2 = {});

  SetupKind setup() const { return setup_; }
  const SphericalGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return spins1_.size(); }
  const Spins& spins(int lawn) const { return lawn == 2 && is_two_lawn(setup_) ? spins2_ : spins1_; }
  std::size_t area(int lawn) const { return lawn == 2 && is_two_lawn(setup_) ? area2_ : area1_; }

  /// Throws InvalidArgument (or NoAntipodalStructure / OddSiteCount) when an
  /// invariant does not hold.
  void validate() const;

  /// Raw spin toggle with area bookkeeping; no invariant checks.
  void toggle(int lawn, std::uint32_t i);

 private:
  LawnState() = default;

  GridPtr grid_;
  SetupKind setup_ = SetupKind::AntipodalOneLawn;
  Spins spins1_;
  Spins spins2_;
  std::size_t area1_ = 0;
  std::size_t area2_ = 0;
};

enum class MoveKind { AntipodalPairFlip, ExchangeFlip };

struct Move {
  MoveKind kind = MoveKind::AntipodalPairFlip;
  int lawn = 1;
  /// Pair flip: the site whose pair is toggled. Exchange: the 1-site turned off.
  std::uint32_t site = 0;
  /// Exchange only: the 0-site turned on.
  std::uint32_t site_off = 0;
  std::optional<double> cached_delta;

  static Move pair_flip(int lawn, std::uint32_t i) { return {MoveKind::AntipodalPairFlip, lawn, i, 0, {}}; }
  static Move exchange(std::uint32_t on, std::uint32_t off) { return {MoveKind::ExchangeFlip, 1, on, off, {}}; }
};

/// Move that undoes `m` once `m` has been applied.
Move inverse(const Move& m);

/// Throws InvalidMove when `m` is not applicable to `state`.
void check_move(const LawnState& state, const Move& m);

LawnState new_random_lawn(GridPtr grid, SetupKind setup, std::uint64_t seed);

/// Lawn of sites with p . axis > 0, balanced to exactly N/2 by toggling the
/// sites closest to the boundary circle (ties by index). Antipodal setups pick
/// the member of each antipodal pair with the larger p . axis, so the result
/// is exactly antipodal even on grids whose pairs are only near-exact.
/// Two-lawn setups receive the same hemisphere in both lawns.
LawnState hemisphere_lawn(GridPtr grid, const Vec3& axis, SetupKind setup);

/// 4 / (sin(theta) N^2 h).
double probability_prefactor(std::size_t n, double h, double theta);

double evaluate_probability(const LawnState& state, const ShellTable& shells);

/// Same functional without a stored table (streams the annulus per site);
/// for grids where the table would not fit in memory.
double evaluate_probability_direct(const LawnState& state, double theta);

/// P(after) - P(before), reading only the shells of the flipped sites.
double delta_probability(const LawnState& state, const Move& m, const ShellTable& shells);

void apply_move(LawnState& state, const Move& m);

/// Closed-form value at theta = pi, where every jump lands on the antipode:
/// the fraction of lawn-1 sites whose antipode is a target site.
double probability_at_pi(const LawnState& state);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Independent estimate: random lawn-1 site, random direction, nearest-site
/// classification of the landing point.
McEstimate mc_oracle_probability(const LawnState& state, double theta, std::size_t n_samples,
                                 std::uint64_t seed);

struct Checkpoint {
  double temperature = 0.0;
  long long sweep = 0;
  double best_probability = 0.0;
  std::uint64_t seed = 0;
};

struct LawnFile {
  std::size_t n = 0;
  double theta = 0.0;
  SetupKind setup = SetupKind::AntipodalOneLawn;
  std::string grid_ref;
  Spins spins1;
  std::optional<Spins> spins2;
  std::optional<Checkpoint> checkpoint;
};

void write_lawn(const std::filesystem::path& path, const LawnState& state, double theta,
                const std::string& grid_ref, const std::optional<Checkpoint>& checkpoint = {});
LawnFile read_lawn_file(const std::filesystem::path& path);
/// Reads a lawn and binds it to `grid`; GridMismatch when N differs or the
/// recorded reference is a hash that does not match.
LawnState read_lawn(const std::filesystem::path& path, GridPtr grid, double* theta = nullptr);

}  // namespace grasshopper
