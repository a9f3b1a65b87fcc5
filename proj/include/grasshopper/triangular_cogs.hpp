#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grasshopper/vec3.hpp"

namespace grasshopper {

/// One tooth: a spherical triangle with its base on the equator and its apex
/// in the south. Inside = z < 0 and both side normals point inward.
struct Tooth {
  double center = 0.0;  // azimuth of the bisecting meridian
  Vec3 left, right, apex;
  Vec3 left_normal, right_normal;
};

/// Hemisphere z > 0 with k triangular teeth added in the south and their
/// antipodal images (gaps) removed from the north. Teeth sit at azimuths
/// 2 j pi / k with base width pi / k, so for odd k teeth and gaps alternate
/// around the equator: position i (azimuth i pi / k) holds a tooth for even i
/// and a gap for odd i.
struct CoggedLawnSpec {
  int q = 0;
  int k = 0;
  double cog_height = 0.0;
  std::vector<Tooth> teeth;  // teeth[j] centered at 2 j pi / k

  double jump() const;
  double half_base() const;
  /// Great circles bounding teeth and gaps (a gap side lies on its tooth's
  /// side circle), equator first.
  std::vector<Vec3> boundary_normals() const;
  bool in_lawn(const Vec3& x) const;
};

/// Teeth with apex at polar angle pi/2 + height. InvalidGeometry unless q >= 2,
/// k >= 1 is odd and 0 <= height < pi/2.
CoggedLawnSpec build_cogged_lawn(int q, int k, double height);

enum class RegionKind { Hemisphere, Antihemisphere, Lawn, Tooth, Gap };

/// Tooth and Gap use the alternating position label i in [0, 2k): even for
/// teeth, odd for gaps. The antipode of position i is position i + k.
struct RegionId {
  RegionKind kind = RegionKind::Hemisphere;
  int label = 0;
};

RegionId tooth(int label);
RegionId gap(int label);
std::string to_string(const RegionId& r);

/// Jump-circle decomposition about one point. The fractions partition the
/// circle: north outside the gaps, south outside the teeth, each tooth and
/// each gap.
struct RegionArcs {
  std::vector<double> angles;  // sorted crossing angles about p, in [0, 2 pi)
  double north_rest = 0.0;
  double south_rest = 0.0;
  std::vector<double> teeth;  // by tooth index j (position 2j)
  std::vector<double> gaps;   // by tooth index j of the antipodal tooth
  bool nudged = false;        // theta moved by 1e-11 off a tangency

  double hemisphere() const;
  double lawn() const;
  double total() const;
  double fraction(const RegionId& r, int k) const;
};

/// TangencyUnresolved if theta + 1e-11 is still tangent to a boundary circle.
RegionArcs jump_circle_region_arcs(const Vec3& p, double theta, const CoggedLawnSpec& spec);

/// Nested globally adaptive Gauss-Kronrod; the tolerance is absolute and
/// applies to each one-dimensional integral.
struct QuadratureOptions {
  double tolerance = 1e-12;
  std::size_t max_panels = 4000;
};

/// (1 / 2 pi) integral over A of the B-fraction of the jump circle. A is the
/// hemisphere, a tooth or a gap. QuadratureNotConverged when a 1-D integral
/// exhausts its panel budget.
double region_pair_probability(const CoggedLawnSpec& spec, double theta, const RegionId& a,
                               const RegionId& b, const QuadratureOptions& opts = {});

/// L^2 = H^2 + (k / pi) int_{T_0} (f_L + f_H - 1) dA, with H^2 = 1 - theta / pi.
double cogged_success_probability(const CoggedLawnSpec& spec, double theta,
                                  const QuadratureOptions& opts = {});

/// Success probability at theta_q = pi / q minus the hemisphere's 1 - 1/q.
double success_deficit(int q, int k, double height, const QuadratureOptions& opts = {});

struct DeficitRow {
  int q = 0;
  int k = 0;
  double height = 0.0;
  double deficit = 0.0;
};

/// `points` equally spaced heights on [lo, hi], evaluated in parallel.
std::vector<DeficitRow> deficit_scan(int q, int k, double lo, double hi, int points,
                                     const QuadratureOptions& opts = {});

/// CSV `q,k,height,deficit` with 15 significant digits.
void write_deficit_csv(const std::filesystem::path& path, const std::vector<DeficitRow>& rows);

}  // namespace grasshopper
