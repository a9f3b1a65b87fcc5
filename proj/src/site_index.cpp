#include "grasshopper/site_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace grasshopper {

SiteIndex::SiteIndex(const SphericalGrid& grid) : grid_(&grid) {
  constexpr double pi = std::numbers::pi;
  const auto n_bands = static_cast<std::size_t>(std::max(1.0, std::ceil(pi / grid.spacing())));
  band_width_ = pi / static_cast<double>(n_bands);
  bands_.resize(n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    bands_[b].polar_lo = static_cast<double>(b) * band_width_;
    bands_[b].polar_hi = static_cast<double>(b + 1) * band_width_;
    bands_[b].polar_mid = 0.5 * (bands_[b].polar_lo + bands_[b].polar_hi);
  }

  std::vector<std::vector<std::pair<double, std::uint32_t>>> buckets(n_bands);
  for (std::uint32_t i = 0; i < grid.size(); ++i) {
    const Vec3& p = grid.point(i);
    const auto b = std::min(n_bands - 1, static_cast<std::size_t>(polar_angle(p) / band_width_));
    buckets[b].emplace_back(azimuth(p), i);
  }
  for (std::size_t b = 0; b < n_bands; ++b) {
    auto& bucket = buckets[b];
    std::sort(bucket.begin(), bucket.end());
    bands_[b].azimuths.reserve(bucket.size());
    bands_[b].ids.reserve(bucket.size());
    for (const auto& [phi, id] : bucket) {
      bands_[b].azimuths.push_back(phi);
      bands_[b].ids.push_back(id);
    }
  }
}

std::uint32_t SiteIndex::nearest(const Vec3& q) const {
  const auto points = grid_->points();
  double radius = band_width_;
  while (true) {
    double best_d2 = std::numeric_limits<double>::infinity();
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    for_each_candidate(q, 0.0, radius, [&](std::uint32_t j) {
      const Vec3 d = points[j] - q;
      const double d2 = dot(d, d);
      if (d2 < best_d2 || (d2 == best_d2 && j < best)) {
        best_d2 = d2;
        best = j;
      }
    });
    // Every site within `radius` was a candidate, so a hit inside it is exact.
    const double chord_limit = 2.0 * std::sin(0.5 * radius);
    if (best != std::numeric_limits<std::uint32_t>::max() &&
        (std::sqrt(best_d2) <= chord_limit || radius >= std::numbers::pi)) {
      return best;
    }
    radius = std::min(std::numbers::pi, 2.0 * radius);
  }
}

std::vector<std::uint32_t> SiteIndex::neighbors_within(std::uint32_t i, double radius) const {
  const auto points = grid_->points();
  std::vector<std::uint32_t> out;
  for_each_candidate(points[i], 0.0, radius, [&](std::uint32_t j) {
    if (j != i && spherical_angle(points[i], points[j]) <= radius) out.push_back(j);
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace grasshopper
