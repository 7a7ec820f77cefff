#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "canaleval/geometry.hpp"
#include "canaleval/metrics.hpp"
#include "canaleval/skeleton.hpp"
#include "canaleval/volume.hpp"

namespace canaleval {

/// A concatenation of one or more skeleton segments.
struct RouteCandidate {
  Curve curve;
  double total_length_mm = 0.0;
  std::vector<std::size_t> segment_ids;
};

struct CanalPair {
  Curve left;
  Curve right;
  double symmetry_score_mm = 0.0;
};

struct ExtractionParams {
  double threshold = 0.5;
  double gap_mm = 4.0;
  double max_angle_deg = 60.0;
  double min_length_mm = 30.0;
  double max_length_mm = 120.0;
  /// Minimum endpoint separation as a fraction of route length.
  double min_straightness = 0.3;
  /// Mid-sagittal plane; the volume's physical x mid-plane when unset.
  std::optional<double> midplane_x_mm;
  double metric_step_mm = kDefaultMetricStep;
  PathOptions paths;
};

/// Binary mask of voxels with probability >= threshold.
Mask segment_probability_volume(const Volume& probability, double threshold);

/// Greedy end-to-end joining of skeleton segments, longest segment first.
/// Two free ends join when their gap is <= gap_mm and the continuation angle
/// between the end tangents (chord over the last three points), and between
/// each tangent and the bridging chord, is <= max_angle_deg.
std::vector<RouteCandidate> concatenate_routes(std::span<const Curve> segments, double gap_mm,
                                               double max_angle_deg);

/// Keeps routes within the length window whose endpoints are at least
/// min_straightness * length apart.
std::vector<RouteCandidate> filter_anatomical(std::span<const RouteCandidate> candidates, double min_length_mm,
                                              double max_length_mm, double min_straightness = 0.3);

/// Symmetry score of a candidate pair: SMCD between the mirrored first curve
/// and the second, both densified to `step_mm`.
double symmetry_score(const Curve& a, const Curve& b, double midplane_x_mm, double step_mm = kDefaultMetricStep);

/// Most mirror-symmetric pair among candidates straddling the mid-plane.
/// Left is the curve with larger mean x (patient left in LPS coordinates).
CanalPair select_symmetric_pair(std::span<const RouteCandidate> candidates, double midplane_x_mm,
                                double step_mm = kDefaultMetricStep);

/// Flips the curve so that index 0 is the anterior (smaller y) end.
Curve orient_anterior_first(const Curve& curve);

/// Physical x mid-plane of a grid.
double grid_midplane_x(const GridGeometry& geometry);

/// Intermediate products of a full extraction run, for diagnostics.
struct ExtractionTrace {
  std::size_t foreground_voxels = 0;
  std::size_t skeleton_voxels = 0;
  std::size_t segments = 0;
  std::size_t routes = 0;
  std::size_t anatomical_routes = 0;
};

/// threshold -> thin -> graph -> paths -> concatenate -> filter -> pair.
/// Throws extraction_failure when no canal pair can be produced.
CanalPair extract_canals(const Volume& probability, const ExtractionParams& params = {},
                         ExtractionTrace* trace = nullptr);

}  // namespace canaleval
