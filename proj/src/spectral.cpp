#include "grasshopper/spectral.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "grasshopper/error.hpp"
#include "grasshopper/io.hpp"
#include "grasshopper/kernels.hpp"

namespace grasshopper {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

Spectrum sph_transform(const LawnState& state, int lawn, int ell_max) {
  if (ell_max < 0) fail(ErrorCode::InvalidArgument, "ell_max must be >= 0");
  if (lawn != 1 && lawn != 2) fail(ErrorCode::InvalidArgument, "lawn index must be 1 or 2");
  const auto half = kernels::omp::harmonic_sums(state.grid().points(), state.spins(lawn), ell_max);
  const double h2 = 4.0 * std::numbers::pi / static_cast<double>(state.size());

  Spectrum s;
  s.ell_max = ell_max;
  s.source = "lawn" + std::to_string(lawn);
  s.coefficients.resize(static_cast<std::size_t>(ell_max + 1) * (ell_max + 1));
  for (int l = 0; l <= ell_max; ++l) {
    for (int m = 0; m <= l; ++m) {
      const std::complex<double> c = h2 * half[tri_index(l, m)];
      s.coefficients[Spectrum::index(l, m)] = c;
      // Real lawn: mu_{l,-m} = (-1)^m conj(mu_lm).
      if (m > 0) s.coefficients[Spectrum::index(l, -m)] = (m % 2 ? -1.0 : 1.0) * std::conj(c);
    }
  }
  return s;
}

Spectrum complement(const Spectrum& s) {
  Spectrum c = s;
  for (std::size_t k = 1; k < c.coefficients.size(); ++k) c.coefficients[k] = -c.coefficients[k];
  c.source = s.source + ":complement";
  return c;
}

std::vector<double> band_power(const Spectrum& s) {
  std::vector<double> c(static_cast<std::size_t>(s.ell_max) + 1, 0.0);
  for (int l = 0; l <= s.ell_max; ++l)
    for (int m = -l; m <= l; ++m) c[l] += std::norm(s.at(l, m));
  return c;
}

std::vector<double> parseval_partial_sums(const Spectrum& s) {
  std::vector<double> c = band_power(s);
  for (std::size_t l = 1; l < c.size(); ++l) c[l] += c[l - 1];
  return c;
}

double parseval_residual(const Spectrum& s) { return kTwoPi - parseval_partial_sums(s).back(); }

double spectral_probability(const Spectrum& spec1, const Spectrum& spec2, double theta,
                            SetupKind setup) {
  if (spec1.ell_max != spec2.ell_max) {
    fail(ErrorCode::CutoffMismatch, "spectra have cutoffs " + std::to_string(spec1.ell_max) +
                                        " and " + std::to_string(spec2.ell_max));
  }
  std::vector<double> p(static_cast<std::size_t>(spec1.ell_max) + 1);
  legendre_table(std::cos(theta), p);
  double sum = 0.0;
  if (!is_two_lawn(setup)) {
    const std::vector<double> c = band_power(spec1);
    for (int l = 0; l <= spec1.ell_max; ++l) sum += c[l] * p[l];
  } else {
    const Spectrum nu = complement(spec2);
    for (int l = 0; l <= spec1.ell_max; ++l) {
      double row = 0.0;
      for (int m = -l; m <= l; ++m) row += (spec1.at(l, m) * std::conj(nu.at(l, m))).real();
      sum += row * p[l];
    }
  }
  return sum / kTwoPi;
}

std::string_view to_string(Parity p) { return p == Parity::OddOnly ? "odd" : "all"; }

Parity parse_parity(std::string_view token) {
  if (token == "odd") return Parity::OddOnly;
  if (token == "all") return Parity::All;
  fail(ErrorCode::BadFlag, "unknown parity '" + std::string(token) + "' (odd|all)");
}

EllStar ell_star(double theta, int ell_max, Parity parity) {
  if (ell_max < 1) fail(ErrorCode::InvalidArgument, "ell_max must be >= 1");
  std::vector<double> p(static_cast<std::size_t>(ell_max) + 1);
  legendre_table(std::cos(theta), p);
  EllStar best{1, p[1]};
  const int step = parity == Parity::OddOnly ? 2 : 1;
  for (int l = 1 + step; l <= ell_max; l += step) {
    if (p[l] > best.value) best = {l, p[l]};
  }
  return best;
}

double probability_upper_bound(double theta, int ell_max, Parity parity) {
  return 0.5 + 0.5 * ell_star(theta, ell_max, parity).value;
}

double setup_upper_bound(double theta, int ell_max, SetupKind setup) {
  switch (setup) {
    case SetupKind::AntipodalOneLawn: return probability_upper_bound(theta, ell_max, Parity::OddOnly);
    case SetupKind::NonAntipodalOneLawn: return probability_upper_bound(theta, ell_max, Parity::All);
    case SetupKind::AntipodalTwoLawn:
      return std::max(probability_upper_bound(theta, ell_max, Parity::OddOnly),
                      probability_upper_bound(std::numbers::pi - theta, ell_max, Parity::OddOnly));
  }
  fail(ErrorCode::InvalidArgument, "unknown setup");
}

void write_spectrum(const std::filesystem::path& path, const Spectrum& s) {
  std::ostringstream out;
  out << "L=" << s.ell_max << " lawn=" << (s.source.empty() ? "unknown" : s.source) << '\n';
  for (int l = 0; l <= s.ell_max; ++l)
    for (int m = -l; m <= l; ++m)
      out << l << ' ' << m << ' ' << format_double(s.at(l, m).real()) << ' '
          << format_double(s.at(l, m).imag()) << '\n';
  write_file_atomic(path, out.str());
}

Spectrum read_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open spectrum file " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedFile, "empty spectrum file");
  Spectrum s;
  s.ell_max = -1;
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("L=", 0) == 0) {
        try {
          s.ell_max = std::stoi(tok.substr(2));
        } catch (const std::logic_error&) {
          fail(ErrorCode::MalformedFile, "bad cutoff " + tok);
        }
      } else if (tok.rfind("lawn=", 0) == 0) {
        s.source = tok.substr(5);
      }
    }
  }
  if (s.ell_max < 0) fail(ErrorCode::MalformedFile, "spectrum header lacks L=");
  const std::size_t count = static_cast<std::size_t>(s.ell_max + 1) * (s.ell_max + 1);
  s.coefficients.assign(count, {});
  std::vector<bool> seen(count, false);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    int l = 0;
    int m = 0;
    double re = 0.0;
    double im = 0.0;
    if (!(row >> l >> m >> re >> im) || l < 0 || l > s.ell_max || std::abs(m) > l) {
      fail(ErrorCode::MalformedFile, "bad spectrum row: " + line);
    }
    s.coefficients[Spectrum::index(l, m)] = {re, im};
    seen[Spectrum::index(l, m)] = true;
  }
  for (bool b : seen)
    if (!b) fail(ErrorCode::MalformedFile, "spectrum file is missing coefficients");
  return s;
}

}  // namespace grasshopper
