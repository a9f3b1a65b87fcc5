#pragma once

#include <cstdint>
#include <vector>

#include "grasshopper/sphere_grid.hpp"

namespace grasshopper {

/// Latitude-band bucketing of grid sites. Bands have polar width close to the
/// lattice spacing; within a band sites are sorted by azimuth so annulus and
/// nearest-site queries only touch a narrow azimuth window per band.
class SiteIndex {
 public:
  explicit SiteIndex(const SphericalGrid& grid);

  /// Invokes fn(j) for every site j whose polar/azimuth position could place
  /// it at angular distance in [r_min, r_max] from q. Candidates are a
  /// superset; callers apply the exact distance test.
  template <typename Fn>
  void for_each_candidate(const Vec3& q, double r_min, double r_max, Fn&& fn) const;

  /// Index of the site closest to q (ties broken by smallest index).
  std::uint32_t nearest(const Vec3& q) const;

  /// All sites within angular distance `radius` of site i, excluding i.
  std::vector<std::uint32_t> neighbors_within(std::uint32_t i, double radius) const;

  std::size_t band_count() const { return bands_.size(); }

 private:
  struct Band {
    double polar_lo;
    double polar_hi;
    double polar_mid;
    std::vector<double> azimuths;    // sorted
    std::vector<std::uint32_t> ids;  // parallel to azimuths
  };

  struct Window {
    double lo;
    double hi;
  };

  void scan_band(const Band& band, double phi_lo, double phi_hi, auto&& fn) const;

  const SphericalGrid* grid_;
  double band_width_;
  std::vector<Band> bands_;
};

}  // namespace grasshopper

#include "grasshopper/site_index_impl.hpp"
