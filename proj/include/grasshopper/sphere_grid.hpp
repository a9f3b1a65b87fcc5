#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grasshopper/vec3.hpp"

namespace grasshopper {

enum class GridKind { TDesign, Healpix, Goldberg, Coulomb, Custom };

std::string_view to_string(GridKind kind);
GridKind parse_grid_kind(std::string_view token);

/// Fixed-point-free involution pairing every site with its (near) antipode.
struct AntipodeMap {
  std::vector<std::uint32_t> pairs;
  /// Largest observed |angle(p_i, p_pairs[i]) - pi|, radians.
  double tolerance = 0.0;
};

/// Immutable set of unit vectors approximating a uniform sampling of the
/// sphere. Every constructor path validates unit norms and rejects duplicate
/// sites; the antipode map, when present, is validated as an involution.
class SphericalGrid {
 public:
  SphericalGrid(std::vector<Vec3> points, GridKind kind,
                std::optional<AntipodeMap> antipodes = std::nullopt);

  std::size_t size() const { return points_.size(); }
  /// Average lattice spacing sqrt(4 pi / N).
  double spacing() const { return spacing_; }
  GridKind kind() const { return kind_; }
  std::span<const Vec3> points() const { return points_; }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  bool has_antipodes() const { return antipodes_.has_value(); }
  const AntipodeMap& antipodes() const;
  std::uint32_t antipode(std::size_t i) const { return antipodes().pairs[i]; }

  /// Returns a copy carrying the given antipode map (validated).
  SphericalGrid with_antipodes(AntipodeMap map) const;

  /// Stable 64-bit FNV-1a digest of the coordinates, as 16 hex digits.
  const std::string& hash() const { return hash_; }

 private:
  std::vector<Vec3> points_;
  GridKind kind_;
  double spacing_;
  std::optional<AntipodeMap> antipodes_;
  std::string hash_;
};

/// Default antipode pairing tolerance for a grid family.
double default_antipode_tolerance(GridKind kind, double spacing);

/// Pairs every site with the site nearest to its antipode. Throws
/// NoAntipodalStructure if the matching is not a fixed-point-free involution
/// or any pair deviates from pi by more than `tol`.
AntipodeMap build_antipode_map(const SphericalGrid& grid, double tol);

/// Attaches an antipode map when the grid supports one at the default
/// tolerance; returns the grid unchanged otherwise.
SphericalGrid with_default_antipodes(const SphericalGrid& grid);

SphericalGrid generate_healpix(int n_side);
SphericalGrid generate_goldberg(int frequency);

/// Undirected edges of the geodesic subdivision behind generate_goldberg.
std::vector<std::pair<std::uint32_t, std::uint32_t>> goldberg_edges(int frequency);

struct CoulombResult {
  SphericalGrid grid;
  bool converged = false;
  double gradient_norm = 0.0;
  /// Energy after every accepted step, starting with the initial energy.
  std::vector<double> energy_history;
};

/// Antipodally symmetric repulsion grid: 2*n_pairs points minimizing the
/// Coulomb energy by projected gradient descent with backtracking.
CoulombResult generate_coulomb(int n_pairs, int max_iters, std::uint64_t seed,
                               double gradient_tol = 1e-10);

/// Coulomb energy sum_{a<b} 1/|r_a - r_b| of an arbitrary point set.
double coulomb_energy(std::span<const Vec3> points);

SphericalGrid load_point_set(const std::filesystem::path& path, GridKind kind);
SphericalGrid load_point_set(const std::filesystem::path& path);
void write_point_set(const SphericalGrid& grid, const std::filesystem::path& path);

/// Parses grid specs such as "healpix:32", "goldberg:16", "coulomb:50" or a
/// file path (optionally prefixed "file:"), and attaches default antipodes.
SphericalGrid make_grid(std::string_view spec, std::uint64_t seed = 1);

}  // namespace grasshopper
