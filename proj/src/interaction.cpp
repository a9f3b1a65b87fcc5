#include "grasshopper/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "grasshopper/error.hpp"
#include "grasshopper/kernels.hpp"

namespace grasshopper {

double kernel_phi(double x) {
  if (std::abs(x) >= 2.0) return 0.0;
  return 0.25 * (1.0 + std::cos(0.5 * std::numbers::pi * x));
}

ShellTable::ShellTable(GridPtr grid, double theta, std::vector<std::uint64_t> offsets,
                       std::vector<std::uint32_t> neighbors, std::vector<double> weights)
    : grid_(std::move(grid)),
      theta_(theta),
      offsets_(std::move(offsets)),
      neighbors_(std::move(neighbors)),
      weights_(std::move(weights)) {
  if (!grid_ || offsets_.size() != grid_->size() + 1 || neighbors_.size() != weights_.size() ||
      offsets_.back() != neighbors_.size()) {
    fail(ErrorCode::InvalidArgument, "inconsistent shell table layout");
  }
}

double ShellTable::weight(std::uint32_t i, std::uint32_t j) const {
  const auto nb = neighbors(i);
  const auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return 0.0;
  return weights(i)[static_cast<std::size_t>(it - nb.begin())];
}

void check_resolvable(const SphericalGrid& grid, double theta, bool antipodal) {
  const double h = grid.spacing();
  const double upper = antipodal ? std::numbers::pi - 4.0 * h : std::numbers::pi;
  if (!(theta >= 4.0 * h && theta <= upper)) {
    std::ostringstream msg;
    msg << "jump angle " << theta << " outside resolvable range [" << 4.0 * h << ", " << upper
        << "] for N=" << grid.size();
    fail(ErrorCode::JumpUnresolvable, msg.str());
  }
}

ShellTable build_shell_table(GridPtr grid, double theta, bool antipodal) {
  check_resolvable(*grid, theta, antipodal);
  kernels::ShellRows rows = kernels::omp::build_shell_rows(*grid, theta);
  return ShellTable(std::move(grid), theta, std::move(rows.offsets), std::move(rows.neighbors),
                    std::move(rows.weights));
}

PotentialEnergyReport potential_energies(const ShellTable& shells) {
  PotentialEnergyReport r;
  r.energies = kernels::omp::row_sums(shells);
  const auto n = static_cast<double>(r.energies.size());
  r.mean = kernels::pairwise_sum(r.energies) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double e : r.energies) {
    const double d = e - r.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  r.variance = m2 / n;
  const double sigma = std::sqrt(r.variance);
  r.skewness = sigma > 0.0 ? (m3 / n) / (sigma * sigma * sigma) : 0.0;
  r.scale = std::sin(shells.theta()) * std::sqrt(std::numbers::pi * n);
  r.scaled_variance = r.variance / (r.scale * r.scale);

  constexpr std::size_t bins = 200;
  const double half = sigma > 0.0 ? 5.0 * sigma : 1.0;
  const double lo = r.mean - half;
  const double width = 2.0 * half / bins;
  r.histogram.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) r.histogram.edges[b] = lo + width * static_cast<double>(b);
  r.histogram.counts.assign(bins, 0);
  for (double e : r.energies) {
    const double pos = std::floor((e - lo) / width);
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++r.histogram.counts[b];
  }
  return r;
}

PotentialEnergyReport potential_energies(GridPtr grid, double theta) {
  return potential_energies(build_shell_table(std::move(grid), theta, false));
}

}  // namespace grasshopper
