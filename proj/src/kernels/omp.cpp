#include <omp.h>

#include <cstdlib>

#include "kernels_impl.hpp"

namespace grasshopper::kernels {

int thread_count() {
  if (const char* env = std::getenv("GRASSHOPPER_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

namespace {

struct OmpExec {
  template <typename Fn>
  static void run(std::size_t n, Fn&& fn) {
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16) num_threads(thread_count())
    for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  }
};

}  // namespace

namespace omp {

ShellRows build_shell_rows(const SphericalGrid& grid, double theta) {
  return detail::build_shell_rows<OmpExec>(grid, theta);
}

double weighted_pair_sum(const ShellTable& shells, std::span<const std::uint8_t> s,
                         std::span<const std::uint8_t> u, bool invert_t) {
  return detail::weighted_pair_sum<OmpExec>(shells, s, u, invert_t);
}

double weighted_pair_sum_direct(const SphericalGrid& grid, double theta,
                                std::span<const std::uint8_t> s,
                                std::span<const std::uint8_t> u, bool invert_t) {
  return detail::weighted_pair_sum_direct<OmpExec>(grid, theta, s, u, invert_t);
}

std::vector<double> row_sums(const ShellTable& shells) {
  return detail::row_sums<OmpExec>(shells);
}

std::vector<std::complex<double>> harmonic_sums(std::span<const Vec3> points,
                                                std::span<const std::uint8_t> s, int ell_max) {
  return detail::harmonic_sums<OmpExec>(points, s, ell_max);
}

std::vector<std::vector<double>> zonal_sums(std::span<const Vec3> points,
                                            std::span<const std::uint8_t> s,
                                            std::span<const Vec3> axes, int ell_max) {
  return detail::zonal_sums<OmpExec>(points, s, axes, ell_max);
}

}  // namespace omp
}  // namespace grasshopper::kernels
