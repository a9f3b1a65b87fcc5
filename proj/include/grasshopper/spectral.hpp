#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "grasshopper/lawn.hpp"
#include "grasshopper/legendre.hpp"

namespace grasshopper {

/// Coefficients mu_lm of a lawn indicator in orthonormal spherical harmonics,
/// 0 <= l <= L, -l <= m <= l, stored at index l^2 + l + m.
struct Spectrum {
  int ell_max = 0;
  std::vector<std::complex<double>> coefficients;
  std::string source;

  static constexpr std::size_t index(int l, int m) {
    return static_cast<std::size_t>(l * l + l + m);
  }
  std::complex<double> at(int l, int m) const { return coefficients[index(l, m)]; }
};

/// mu_lm = h^2 sum_i s_i conj(Y_lm(p_i)) with uniform weights h^2 = 4 pi / N.
Spectrum sph_transform(const LawnState& state, int lawn, int ell_max);

/// Spectrum of the complement 1 - mu: l >= 1 coefficients negated, mu_00 kept
/// (both lawns have area 2 pi).
Spectrum complement(const Spectrum& s);

/// C_l = sum_m |mu_lm|^2.
std::vector<double> band_power(const Spectrum& s);

/// Cumulative sums of C_l for l = 0..L.
std::vector<double> parseval_partial_sums(const Spectrum& s);

/// 2 pi - sum_{l <= L} C_l.
double parseval_residual(const Spectrum& s);

/// One-lawn setups: (1 / 2 pi) sum |mu_lm|^2 P_l(cos theta), with spec2 unused
/// beyond the cutoff check. Two-lawn: (1 / 2 pi) Re sum mu1_lm conj(nu_lm)
/// P_l(cos theta), nu the complement spectrum of lawn 2. CutoffMismatch when
/// the cutoffs differ.
double spectral_probability(const Spectrum& spec1, const Spectrum& spec2, double theta,
                            SetupKind setup);

enum class Parity { OddOnly, All };
std::string_view to_string(Parity p);
Parity parse_parity(std::string_view token);

struct EllStar {
  int ell = 1;
  double value = 0.0;  // P_ell*(cos theta)
};

/// argmax over admissible l in [1, ell_max] of P_l(cos theta); ties go to the
/// smaller l.
EllStar ell_star(double theta, int ell_max, Parity parity);

/// 1/2 + 1/2 P_ell*(cos theta).
double probability_upper_bound(double theta, int ell_max, Parity parity);

/// Bound matching a setup: odd parity for antipodal one-lawn, all degrees
/// for non-antipodal, and max |P_l| over odd l for two lawns (the cross term
/// can pick either sign), i.e. the larger odd bound at theta and pi - theta.
double setup_upper_bound(double theta, int ell_max, SetupKind setup);

/// Text format: header `L=<int> lawn=<id>`, then rows `l m re im`.
void write_spectrum(const std::filesystem::path& path, const Spectrum& s);
Spectrum read_spectrum(const std::filesystem::path& path);

}  // namespace grasshopper
