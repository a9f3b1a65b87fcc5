#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

namespace grasshopper {

/// Legendre polynomial P_ell(x) by the three-term recurrence.
inline double legendre_P(int ell, double x) {
  if (ell == 0) return 1.0;
  double p0 = 1.0;
  double p1 = x;
  for (int l = 2; l <= ell; ++l) {
    const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Fills out[l] = P_l(x) for l = 0..out.size()-1.
inline void legendre_table(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() > 1) out[1] = x;
  for (std::size_t l = 2; l < out.size(); ++l) {
    const double dl = static_cast<double>(l);
    out[l] = ((2.0 * dl - 1.0) * x * out[l - 1] - (dl - 1.0) * out[l - 2]) / dl;
  }
}

/// Index of (ell, m), m >= 0, in a triangular coefficient array.
constexpr std::size_t tri_index(int ell, int m) {
  return static_cast<std::size_t>(ell) * (ell + 1) / 2 + static_cast<std::size_t>(m);
}

constexpr std::size_t tri_size(int ell_max) { return tri_index(ell_max + 1, 0); }

/// Orthonormal associated Legendre factors: out[tri_index(l, m)] is the
/// polar part of Y_lm (Condon-Shortley phase included) so that
/// Y_lm(polar, azim) = out * exp(i m azim). Ascending recurrence in l at
/// fixed m starting from the sectoral term.
inline void normalized_alf(int ell_max, double cos_t, double sin_t, std::span<double> out) {
  out[0] = 0.5 / std::sqrt(std::numbers::pi);
  double pmm = out[0];
  for (int m = 0; m <= ell_max; ++m) {
    if (m > 0) {
      pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_t;
      out[tri_index(m, m)] = pmm;
    }
    if (m + 1 > ell_max) continue;
    double prev2 = pmm;
    double prev1 = std::sqrt(2.0 * m + 3.0) * cos_t * pmm;
    out[tri_index(m + 1, m)] = prev1;
    double a_prev = std::sqrt(2.0 * m + 3.0);
    for (int l = m + 2; l <= ell_max; ++l) {
      const double l2 = static_cast<double>(l) * l;
      const double m2 = static_cast<double>(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double cur = a * (cos_t * prev1 - prev2 / a_prev);
      out[tri_index(l, m)] = cur;
      prev2 = prev1;
      prev1 = cur;
      a_prev = a;
    }
  }
}

}  // namespace grasshopper
