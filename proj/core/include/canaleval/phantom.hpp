#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canaleval/annotation.hpp"
#include "canaleval/extraction.hpp"
#include "canaleval/geometry.hpp"
#include "canaleval/volume.hpp"

namespace canaleval {

/// Synthetic canal pair, raters and probability volume, fully determined by
/// the seed. Random draws use separate counter-based streams: truth 0,
/// rater r 1000 + r, noise blob b 2000 + b.
struct PhantomSpec {
  std::uint64_t seed = 1;
  GridGeometry grid = default_grid();

  double min_length_mm = 40.0;
  double max_length_mm = 80.0;
  double min_radius_mm = 20.0;
  double max_radius_mm = 60.0;
  /// Displacement of the left canal from the exact mirror image of the right.
  Point3 mirror_offset_mm{0.0, 1.0, 0.5};
  /// Anterior end of the right canal relative to the grid mid-plane / origin.
  double anterior_half_separation_mm = 12.0;
  double anterior_y_mm = 4.0;
  double anterior_z_mm = 8.0;
  /// Lateral widening over the canal length and peak outward bow.
  double divergence_mm = 8.0;
  double bow_mm = 1.5;

  int raters = 4;
  double sigma_mm = 0.3;
  double control_spacing_mm = 3.0;
  /// Posterior truncation per rater is uniform in [0, max_truncation_mm].
  double max_truncation_mm = 5.0;

  int blob_count = 6;
  double blob_min_mm = 1.5;
  double blob_max_mm = 4.0;
  /// Minimum gap between a blob surface and a canal surface.
  double blob_clearance_mm = 6.0;

  double tube_diameter_mm = 3.0;
  /// Width of the soft falloff outside the tube wall.
  double falloff_mm = 0.6;

  static GridGeometry default_grid();
};

/// Throws spec_error on inconsistent parameters.
void validate(const PhantomSpec& spec);

std::string phantom_scan_id(std::uint64_t seed);
std::string phantom_rater_id(int rater);
inline constexpr const char* kPhantomDevice = "phantom";

/// Shape parameters drawn for one seed.
struct PhantomShape {
  double length_mm = 0.0;
  double radius_mm = 0.0;
  double turn_rad = 0.0;
};

PhantomShape draw_shape(const PhantomSpec& spec);

/// Anterior-first left/right canal axes. Throws spec_error when a canal with
/// its tube leaves the grid.
CanalPair generate_ground_truth(const PhantomSpec& spec);

/// One annotation document per rater, control points every ~control_spacing_mm
/// along the (posteriorly truncated) truth with isotropic normal jitter.
std::vector<AnnotationDocument> simulate_raters(const CanalPair& truth, const PhantomSpec& spec);

/// Probability assigned at distance `d_mm` from the nearest canal axis.
double tube_probability(double d_mm, const PhantomSpec& spec);

/// Soft tubes around both axes, ellipsoidal noise blobs and a 0.05 floor.
Volume render_probability_volume(const CanalPair& truth, const PhantomSpec& spec);

inline constexpr double kBackgroundProbability = 0.05;
inline constexpr double kAxisProbability = 0.95;
inline constexpr double kBlobPeakProbability = 0.7;

}  // namespace canaleval
