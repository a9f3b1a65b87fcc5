#pragma once

// Hot loops in two flavors: `serial` is the reference, `omp` distributes the
// same fixed partitions over OpenMP threads. Both reduce in an order that does
// not depend on the thread count, so their results are bitwise identical.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "grasshopper/interaction.hpp"

namespace grasshopper::kernels {

struct ShellRows {
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> neighbors;
  std::vector<double> weights;
};

/// Sites per block for blocked reductions (transform partial sums).
inline constexpr std::size_t kBlock = 256;

/// Recursive pairwise summation; fixed split points.
double pairwise_sum(std::span<const double> v);

/// Worker count from GRASSHOPPER_THREADS (0 or unset = OpenMP default).
int thread_count();

#define GRASSHOPPER_KERNEL_DECLS                                                              \
  ShellRows build_shell_rows(const SphericalGrid& grid, double theta);                       \
  /* sum_i s_i sum_j w_ij t_j with t_j = (invert_t ? 1 - u_j : u_j) */                       \
  double weighted_pair_sum(const ShellTable& shells, std::span<const std::uint8_t> s,        \
                           std::span<const std::uint8_t> u, bool invert_t);                  \
  /* Same sum, streaming over the annulus without storing a table. */                        \
  double weighted_pair_sum_direct(const SphericalGrid& grid, double theta,                   \
                                  std::span<const std::uint8_t> s,                           \
                                  std::span<const std::uint8_t> u, bool invert_t);           \
  /* Row sums sum_j w_ij (site potential energies). */                                       \
  std::vector<double> row_sums(const ShellTable& shells);                                    \
  /* Unweighted sums sum_i s_i conj(Y_lm(p_i)) for m >= 0, triangular layout. */             \
  std::vector<std::complex<double>> harmonic_sums(std::span<const Vec3> points,              \
                                                  std::span<const std::uint8_t> s,           \
                                                  int ell_max);                              \
  /* For each axis a: out[a][l] = sum_i s_i P_l(a . p_i), l = 0..ell_max. */                 \
  std::vector<std::vector<double>> zonal_sums(std::span<const Vec3> points,                  \
                                              std::span<const std::uint8_t> s,               \
                                              std::span<const Vec3> axes, int ell_max);

namespace serial {
GRASSHOPPER_KERNEL_DECLS
}  // namespace serial

namespace omp {
GRASSHOPPER_KERNEL_DECLS
}  // namespace omp

#undef GRASSHOPPER_KERNEL_DECLS

}  // namespace grasshopper::kernels
