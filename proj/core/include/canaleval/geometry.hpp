#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace canaleval {

/// World-space point in millimeters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

inline Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Point3 operator*(double s, Point3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Point3 operator*(Point3 a, double s) { return s * a; }

inline double dot(Point3 a, Point3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Point3 cross(Point3 a, Point3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double squared_norm(Point3 a) { return dot(a, a); }
inline double norm(Point3 a) { return std::sqrt(squared_norm(a)); }
inline double distance(Point3 a, Point3 b) { return norm(a - b); }
inline Point3 lerp(Point3 a, Point3 b, double t) { return a + t * (b - a); }
inline bool is_finite(Point3 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

/// Lexicographic (x, then y, then z) ordering used for deterministic tie-breaks.
bool lexicographic_less(Point3 a, Point3 b);

/// Minimum distance from `p` to the closed segment [a, b].
double point_segment_distance(Point3 p, Point3 a, Point3 b);

enum class Side { left, right };

std::string_view to_string(Side side) noexcept;
Side parse_side(std::string_view text);

enum class Clarity { clear, unclear };

std::string_view to_string(Clarity clarity) noexcept;
Clarity parse_clarity(std::string_view text);

/// Ordered polyline, index 0 at the anterior (foramen mentale) end.
struct Curve {
  std::vector<Point3> points;
  Side side = Side::left;
  std::string source;

  friend bool operator==(const Curve&, const Curve&) = default;
};

/// Throws invalid_input unless the curve has >= 2 finite points, distinct
/// consecutive points and positive length.
void validate(const Curve& curve);

struct ControlPointAnnotation {
  std::vector<Point3> control_points;
  Side side = Side::left;
  std::string rater;
  Clarity clarity = Clarity::clear;
};

/// Centripetal Catmull-Rom interpolation through the control points. Each
/// span between consecutive control points is split into equal arc-length
/// pieces no longer than `step_mm`, so every control point is reproduced
/// exactly. Two control points degenerate to the straight line.
Curve interpolate_spline(const ControlPointAnnotation& annotation, double step_mm);

/// Point on the centripetal Catmull-Rom span p1->p2 at local parameter u in [0, 1].
Point3 catmull_rom_point(Point3 p0, Point3 p1, Point3 p2, Point3 p3, double u);

double arc_length(std::span<const Point3> points);
inline double arc_length(const Curve& curve) { return arc_length(curve.points); }

/// Cumulative arc length at every vertex; front() == 0.
std::vector<double> cumulative_length(std::span<const Point3> points);

/// Point at arc length `s` along the polyline (clamped to [0, length]).
Point3 point_at_length(std::span<const Point3> points, double s);

/// `n` points at equal arc-length intervals, endpoints preserved.
Curve resample_uniform(const Curve& curve, int n);

/// Points every `step_mm` of arc length from the start; the final interval
/// may be shorter so the far endpoint is kept.
Curve resample_step(const Curve& curve, double step_mm);

/// Keeps the first `length_mm` of arc length; the cut point is interpolated.
Curve truncate_to_length(const Curve& curve, double length_mm);

/// Truncates every curve at its posterior end to the shortest length in the
/// group. All curves must be on the same side.
std::vector<Curve> trim_to_shortest(std::span<const Curve> curves);

/// Reflects x -> 2 * plane_x_mm - x.
Curve mirror_sagittal(const Curve& curve, double plane_x_mm);

Curve reversed(const Curve& curve);

/// Subset of the vertices in order: a vertex is kept once the arc length
/// since the previous kept vertex reaches `min_spacing_mm`. Both ends are
/// always kept.
Curve decimate(const Curve& curve, double min_spacing_mm);

Point3 centroid(std::span<const Point3> points);

}  // namespace canaleval
