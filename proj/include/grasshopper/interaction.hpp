#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "grasshopper/sphere_grid.hpp"

namespace grasshopper {

using GridPtr = std::shared_ptr<const SphericalGrid>;

/// Smoothed delta profile phi(x) = (1 + cos(pi x / 2)) / 4 on |x| < 2.
double kernel_phi(double x);

/// Pairwise kernel weights w_ij = phi((theta_ij - theta) / h) for all pairs
/// with |theta_ij - theta| < 2h, stored row-compressed with rows sorted by j.
class ShellTable {
 public:
  ShellTable(GridPtr grid, double theta, std::vector<std::uint64_t> offsets,
             std::vector<std::uint32_t> neighbors, std::vector<double> weights);

  double theta() const { return theta_; }
  const SphericalGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return offsets_.size() - 1; }

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], neighbors_.data() + offsets_[i + 1]};
  }
  std::span<const double> weights(std::size_t i) const {
    return {weights_.data() + offsets_[i], weights_.data() + offsets_[i + 1]};
  }
  std::size_t entry_count() const { return neighbors_.size(); }
  double mean_shell_size() const {
    return static_cast<double>(entry_count()) / static_cast<double>(size());
  }

  /// w_ij, or 0 when j is not in the shell of i.
  double weight(std::uint32_t i, std::uint32_t j) const;

 private:
  GridPtr grid_;
  double theta_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
  std::vector<double> weights_;
};

/// Throws JumpUnresolvable unless 4h <= theta <= pi (pi - 4h when the table
/// feeds an antipodal setup).
void check_resolvable(const SphericalGrid& grid, double theta, bool antipodal);

ShellTable build_shell_table(GridPtr grid, double theta, bool antipodal = false);

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 entries
  std::vector<std::size_t> counts;
};

struct PotentialEnergyReport {
  std::vector<double> energies;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  /// Continuum value of E_i, sin(theta) sqrt(pi N). Raw energies grow like
  /// sqrt(N), so grids of different size are compared through
  /// scaled_variance = variance / scale^2.
  double scale = 0.0;
  double scaled_variance = 0.0;
  /// 200 uniform bins over mean +- 5 sigma; values outside are clamped into
  /// the end bins so that counts sum to N.
  Histogram histogram;
};

PotentialEnergyReport potential_energies(const ShellTable& shells);
PotentialEnergyReport potential_energies(GridPtr grid, double theta);

}  // namespace grasshopper
