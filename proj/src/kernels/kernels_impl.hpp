#pragma once

// Kernel bodies shared by the serial and OpenMP translation units. `Exec`
// supplies `run(n, fn)`, invoking fn(i) for i in [0, n); every reduction below
// writes per-index partials first and combines them in index order.

#include <algorithm>
#include <cmath>
#include <utility>

#include "grasshopper/kernels.hpp"
#include "grasshopper/legendre.hpp"
#include "grasshopper/site_index.hpp"

namespace grasshopper::kernels::detail {

inline void shell_row(const SphericalGrid& grid, const SiteIndex& index, double theta,
                      std::uint32_t i, std::vector<std::pair<std::uint32_t, double>>& row) {
  const double h = grid.spacing();
  const Vec3& p = grid.point(i);
  row.clear();
  index.for_each_candidate(p, theta - 2.0 * h, theta + 2.0 * h, [&](std::uint32_t j) {
    if (j == i) return;
    const double x = (spherical_angle(p, grid.point(j)) - theta) / h;
    if (std::abs(x) >= 2.0) return;
    const double w = kernel_phi(x);
    if (w > 0.0) row.emplace_back(j, w);
  });
  std::sort(row.begin(), row.end());
}

template <typename Exec>
ShellRows build_shell_rows(const SphericalGrid& grid, double theta) {
  const SiteIndex index(grid);
  const std::size_t n = grid.size();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  Exec::run(n, [&](std::size_t i) {
    thread_local std::vector<std::pair<std::uint32_t, double>> scratch;
    shell_row(grid, index, theta, static_cast<std::uint32_t>(i), scratch);
    rows[i].assign(scratch.begin(), scratch.end());
  });
  ShellRows out;
  out.offsets.resize(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) out.offsets[i + 1] = out.offsets[i] + rows[i].size();
  out.neighbors.resize(out.offsets[n]);
  out.weights.resize(out.offsets[n]);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = out.offsets[i];
    for (const auto& [j, w] : rows[i]) {
      out.neighbors[k] = j;
      out.weights[k] = w;
      ++k;
    }
    std::vector<std::pair<std::uint32_t, double>>().swap(rows[i]);
  }
  return out;
}

template <typename Exec>
double weighted_pair_sum(const ShellTable& shells, std::span<const std::uint8_t> s,
                         std::span<const std::uint8_t> u, bool invert_t) {
  const std::size_t n = shells.size();
  std::vector<double> partial(n, 0.0);
  Exec::run(n, [&](std::size_t i) {
    if (!s[i]) return;
    const auto nb = shells.neighbors(i);
    const auto w = shells.weights(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if ((u[nb[k]] != 0) != invert_t) acc += w[k];
    }
    partial[i] = acc;
  });
  return pairwise_sum(partial);
}

template <typename Exec>
double weighted_pair_sum_direct(const SphericalGrid& grid, double theta,
                                std::span<const std::uint8_t> s,
                                std::span<const std::uint8_t> u, bool invert_t) {
  const SiteIndex index(grid);
  const std::size_t n = grid.size();
  std::vector<double> partial(n, 0.0);
  Exec::run(n, [&](std::size_t i) {
    if (!s[i]) return;
    thread_local std::vector<std::pair<std::uint32_t, double>> row;
    shell_row(grid, index, theta, static_cast<std::uint32_t>(i), row);
    double acc = 0.0;
    for (const auto& [j, w] : row) {
      if ((u[j] != 0) != invert_t) acc += w;
    }
    partial[i] = acc;
  });
  return pairwise_sum(partial);
}

template <typename Exec>
std::vector<double> row_sums(const ShellTable& shells) {
  std::vector<double> out(shells.size(), 0.0);
  Exec::run(shells.size(), [&](std::size_t i) {
    double acc = 0.0;
    for (double w : shells.weights(i)) acc += w;
    out[i] = acc;
  });
  return out;
}

template <typename Exec>
std::vector<std::complex<double>> harmonic_sums(std::span<const Vec3> points,
                                                std::span<const std::uint8_t> s, int ell_max) {
  const std::size_t n = points.size();
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
  const std::size_t width = tri_size(ell_max);
  std::vector<std::complex<double>> partial(n_blocks * width);
  Exec::run(n_blocks, [&](std::size_t b) {
    std::vector<double> alf(width);
    std::complex<double>* acc = partial.data() + b * width;
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      if (!s[i]) continue;
      const Vec3& p = points[i];
      const double sin_t = std::hypot(p.x, p.y);
      normalized_alf(ell_max, p.z, sin_t, alf);
      const double phi = std::atan2(p.y, p.x);
      for (int m = 0; m <= ell_max; ++m) {
        const std::complex<double> e(std::cos(m * phi), -std::sin(m * phi));
        for (int l = m; l <= ell_max; ++l) acc[tri_index(l, m)] += alf[tri_index(l, m)] * e;
      }
    }
  });
  std::vector<std::complex<double>> out(width);
  for (std::size_t b = 0; b < n_blocks; ++b)
    for (std::size_t k = 0; k < width; ++k) out[k] += partial[b * width + k];
  return out;
}

template <typename Exec>
std::vector<std::vector<double>> zonal_sums(std::span<const Vec3> points,
                                            std::span<const std::uint8_t> s,
                                            std::span<const Vec3> axes, int ell_max) {
  std::vector<std::vector<double>> out(axes.size());
  Exec::run(axes.size(), [&](std::size_t a) {
    std::vector<double> acc(static_cast<std::size_t>(ell_max) + 1, 0.0);
    std::vector<double> table(acc.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!s[i]) continue;
      legendre_table(dot(axes[a], points[i]), table);
      for (std::size_t l = 0; l < acc.size(); ++l) acc[l] += table[l];
    }
    out[a] = std::move(acc);
  });
  return out;
}

}  // namespace grasshopper::kernels::detail
