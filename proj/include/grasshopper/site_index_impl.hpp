#pragma once

// Template members of SiteIndex; included from site_index.hpp only.

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grasshopper {

inline void SiteIndex::scan_band(const Band& band, double phi_lo, double phi_hi,
                                 auto&& fn) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const auto emit_range = [&](double a, double b) {
    auto first = std::lower_bound(band.azimuths.begin(), band.azimuths.end(), a);
    auto last = std::upper_bound(first, band.azimuths.end(), b);
    for (auto it = first; it != last; ++it) {
      fn(band.ids[static_cast<std::size_t>(it - band.azimuths.begin())]);
    }
  };
  if (phi_hi - phi_lo >= two_pi) {
    for (auto id : band.ids) fn(id);
    return;
  }
  double a = std::fmod(phi_lo, two_pi);
  if (a < 0.0) a += two_pi;
  const double b = a + (phi_hi - phi_lo);
  if (b <= two_pi) {
    emit_range(a, b);
  } else {
    emit_range(a, two_pi);
    emit_range(0.0, b - two_pi);
  }
}

template <typename Fn>
void SiteIndex::for_each_candidate(const Vec3& q, double r_min, double r_max, Fn&& fn) const {
  constexpr double pi = std::numbers::pi;
  constexpr double slack = 1e-9;
  const double polar_q = polar_angle(q);
  const double phi_q = azimuth(q);
  const double cq = std::cos(polar_q);
  const double sq = std::sin(polar_q);
  const double pad = 0.5 * band_width_ + slack;
  const double r_lo = std::max(0.0, r_min - pad);
  const double r_hi = std::min(pi, r_max + pad);
  const double cos_lo = std::cos(r_lo);
  const double cos_hi = std::cos(r_hi);

  for (const Band& band : bands_) {
    if (band.ids.empty()) continue;
    if (band.polar_hi < polar_q - r_hi || band.polar_lo > polar_q + r_hi) continue;
    const double cc = std::cos(band.polar_mid);
    const double sc = std::sin(band.polar_mid);
    const double denom = sq * sc;
    if (denom < 1e-9) {
      for (auto id : band.ids) fn(id);
      continue;
    }
    const double lo = (cos_hi - cq * cc) / denom;
    const double hi = (cos_lo - cq * cc) / denom;
    if (lo > 1.0 + slack || hi < -1.0 - slack) continue;
    const double dphi_max = lo <= -1.0 ? pi : std::acos(std::min(1.0, lo));
    const double dphi_min = hi >= 1.0 ? 0.0 : std::acos(std::max(-1.0, hi));
    // Windows must stay disjoint so each site is emitted at most once.
    if (dphi_min <= slack) {
      scan_band(band, phi_q - dphi_max - slack, phi_q + dphi_max + slack, fn);
    } else if (dphi_max + slack >= pi) {
      scan_band(band, phi_q + dphi_min - slack, phi_q + 2.0 * pi - dphi_min + slack, fn);
    } else {
      scan_band(band, phi_q + dphi_min - slack, phi_q + dphi_max + slack, fn);
      scan_band(band, phi_q - dphi_max - slack, phi_q - dphi_min + slack, fn);
    }
  }
}

}  // namespace grasshopper
