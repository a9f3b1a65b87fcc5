#include "kernels_impl.hpp"

namespace grasshopper::kernels {

namespace {

struct SerialExec {
  template <typename Fn>
  static void run(std::size_t n, Fn&& fn) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
};

}  // namespace

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

namespace serial {

ShellRows build_shell_rows(const SphericalGrid& grid, double theta) {
  return detail::build_shell_rows<SerialExec>(grid, theta);
}

double weighted_pair_sum(const ShellTable& shells, std::span<const std::uint8_t> s,
                         std::span<const std::uint8_t> u, bool invert_t) {
  return detail::weighted_pair_sum<SerialExec>(shells, s, u, invert_t);
}

double weighted_pair_sum_direct(const SphericalGrid& grid, double theta,
                                std::span<const std::uint8_t> s,
                                std::span<const std::uint8_t> u, bool invert_t) {
  return detail::weighted_pair_sum_direct<SerialExec>(grid, theta, s, u, invert_t);
}

std::vector<double> row_sums(const ShellTable& shells) {
  return detail::row_sums<SerialExec>(shells);
}

std::vector<std::complex<double>> harmonic_sums(std::span<const Vec3> points,
                                                std::span<const std::uint8_t> s, int ell_max) {
  return detail::harmonic_sums<SerialExec>(points, s, ell_max);
}

std::vector<std::vector<double>> zonal_sums(std::span<const Vec3> points,
                                            std::span<const std::uint8_t> s,
                                            std::span<const Vec3> axes, int ell_max) {
  return detail::zonal_sums<SerialExec>(points, s, axes, ell_max);
}

}  // namespace serial
}  // namespace grasshopper::kernels
