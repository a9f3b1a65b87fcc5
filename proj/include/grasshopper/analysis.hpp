#pragma once

#include <optional>
#include <vector>

#include "grasshopper/lawn.hpp"

namespace grasshopper {

/// Exact success probability of a hemispherical lawn: 1 - theta / pi.
double hemisphere_reference(double theta);

struct OrientationStats {
  double theta = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double reference = 0.0;
  std::vector<double> samples;
};

/// Hemisphere lawns about `orientations` uniformly random axes, evaluated with
/// the given table. Antipodal balancing when the grid carries antipodes.
OrientationStats hemisphere_orientation_stats(const ShellTable& shells, int orientations,
                                              std::uint64_t seed);

/// Zonal (m = 0) band power of `lawn` about a unit axis, l = 1..ell_max.
double zonal_power(const LawnState& state, int lawn, const Vec3& axis, int ell_max);

/// Axis maximizing zonal band power: 512-point spiral scan, then a shrinking
/// pattern search. Sign chosen so lawn 1's centroid lies on the + side.
Vec3 alignment_axis(const LawnState& state, int lawn = 1, int ell_max = 40);

struct BoundarySeries {
  std::vector<double> phi;    // bin centers
  std::vector<double> theta;  // mean polar angle of interface sites
  std::vector<std::uint8_t> valid;
  Vec3 axis;
  std::size_t valid_count() const;
};

/// Interface sites (an opposite-spin site within 1.5 h) binned by azimuth
/// about `axis`. DegenerateBoundary when fewer than bins / 4 bins are filled.
BoundarySeries extract_boundary(const LawnState& state, const Vec3& axis, int bins = 512,
                                int lawn = 1);

/// Magnitudes of the DFT of Theta(phi) - mean; element n is wavenumber n
/// (element 0 is unused and zero), n = 1..B/2. Masked bins are filled by
/// periodic linear interpolation; DegenerateBoundary if more than 25% masked.
std::vector<double> fourier_spectrum(const BoundarySeries& series);

struct CogReport {
  int cog_count = 0;
  int mode = 0;
  double height = 0.0;
  double height_std = 0.0;
  std::vector<double> fourier_amplitudes;
  Vec3 axis;
  int bins = 0;
};

/// Dominant boundary wavenumber about the alignment axis. A peak below 5x the
/// median amplitude reports k = 0. Bins default to the largest power of two
/// in [64, 512] that leaves about 4 interface sites per bin.
CogReport count_cogs(const LawnState& state, double theta, int lawn = 1, int bins = 0);

struct StripeComparison {
  int stripe_count = 0;
  double irregular = 0.0;
  double regular = 0.0;
  double difference = 0.0;  // regular - irregular
};

struct StripeReport {
  int stripe_count = 0;
  double predicted = 0.0;
  Vec3 axis;
  double width = 0.0;            // pi / (2 n_s)
  double predicted_width = 0.0;  // (sqrt 3 / 2)(pi - theta)
  double zonal_ratio = 0.0;      // zonal power / mean non-zonal band power
  std::vector<double> ring_means;
  std::optional<StripeComparison> regular_vs_irregular;
};

/// Lawn-1 bands among 256 iso-latitude rings about the zonal axis.
/// NoStripeStructure when zonal power (l = 1..40) is below 2x the non-zonal
/// power averaged over those bands, or when no ring belongs to the lawn.
StripeReport count_stripes(const LawnState& state, double theta);

/// pi / (sqrt(3) (pi - theta)); +infinity at theta = pi.
double predicted_stripes(double theta);

/// Exactly zonal antipodal lawn with 2 n_s equal-width bands about `axis`;
/// `pole_in_lawn` selects the color of the band around -axis. The member of
/// each antipodal pair nearer +axis decides, so area is exactly N/2.
LawnState regular_stripe_lawn(GridPtr grid, const Vec3& axis, int stripes, bool pole_in_lawn,
                              SetupKind setup = SetupKind::AntipodalOneLawn);

/// Builds the regular stripe lawn with the same count, axis and pole color and
/// evaluates both. One-lawn setups on grids with antipodes.
StripeComparison compare_regular_stripes(const LawnState& state, const ShellTable& shells);

/// 1 if a jump of length r (in stripe widths) at angle phi to the stripes,
/// starting at offset y in [0, 1), lands on the other color, else 0.
int planar_stripe_angle_success(double r, double phi, double y);

/// y-average of the above: r sin phi up to 1, then 2 - r sin phi (a
/// triangle wave in r sin phi beyond 2).
double planar_stripe_h(double r, double phi);

/// u(r) = (2 / pi) int_0^{pi/2} h(r, phi) dphi in closed form: 2r/pi for
/// r <= 1, (2/pi)(r - 2 sqrt(r^2 - 1) + pi - 2 asin(1/r)) up to 2, and the
/// piecewise sum over stripe crossings beyond (tends to 1/2).
double planar_stripe_success(double r);

/// du/dr: 2/pi for r <= 1, (2/pi)(1 - 2 sqrt(1 - 1/r^2)) up to 2.
double planar_stripe_success_derivative(double r);

/// Golden-section maximization of u on [1, 2], carried out in 113-bit
/// arithmetic because u is flat to 1e-16 within 1e-8 of the optimum.
double planar_stripe_optimum(double tol = 1e-13);

}  // namespace grasshopper
