#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "canaleval/geometry.hpp"

namespace canaleval {

/// Default densification step applied to curves before any distance metric.
inline constexpr double kDefaultMetricStep = 0.2;
inline constexpr double kDefaultSafetyMargin = 2.0;

/// Static kd-tree over a point set for exact nearest-point distance queries.
/// Results are bit-identical to a linear scan.
class PointIndex {
 public:
  explicit PointIndex(std::span<const Point3> points);

  /// Minimum Euclidean distance from `query` to the indexed points.
  double nearest_distance(Point3 query) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::int32_t point = -1;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::vector<std::int32_t>& ids, std::size_t lo, std::size_t hi, int depth);
  void search(std::int32_t node, Point3 q, double& best_sq) const;

  std::vector<Point3> points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

/// min over s in S of |x - s|. Throws on an empty set.
double point_to_curve_distance(Point3 x, std::span<const Point3> curve);
inline double point_to_curve_distance(Point3 x, const Curve& curve) {
  return point_to_curve_distance(x, std::span<const Point3>(curve.points));
}

/// Mean over t in T of d(t, E). Directional: T is the ground truth.
double mcd(const Curve& truth, const Curve& estimate);

/// (mcd(T, E) + mcd(E, T)) / 2.
double smcd(const Curve& truth, const Curve& estimate);

/// Fraction of points of `truth` within `margin_mm` of `estimate`.
double margin_proportion(const Curve& truth, const Curve& estimate, double margin_mm = kDefaultSafetyMargin);

/// `truth` resampled to `n` uniformly spaced points, each mapped to its
/// distance from `reference`. Index 0 is the anterior end.
std::vector<double> position_profile(const Curve& truth, const Curve& reference, int n = 200);

/// Both curves densified with `resample_step(step_mm)`.
Curve densified(const Curve& curve, double step_mm = kDefaultMetricStep);

struct CurveMetricRow {
  std::string scan_id;
  Side side = Side::left;
  std::string truth_source;
  std::string estimate_source;
  double mcd_mm = 0.0;
  double smcd_mm = 0.0;
  double margin_proportion = 0.0;
  std::optional<double> dice;
};

/// Densifies both curves and fills every curve metric of the row.
CurveMetricRow compare_curves(const std::string& scan_id, const Curve& truth, const Curve& estimate,
                              double margin_mm = kDefaultSafetyMargin, double step_mm = kDefaultMetricStep);

}  // namespace canaleval
