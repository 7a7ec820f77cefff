#include "canaleval/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "canaleval/error.hpp"

namespace canaleval {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_annotation: return "invalid_annotation";
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::geometry_mismatch: return "geometry_mismatch";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::extraction_failure: return "extraction_failure";
    case ErrorKind::degenerate_test: return "degenerate_test";
    case ErrorKind::parse_error: return "parse_error";
    case ErrorKind::spec_error: return "spec_error";
    case ErrorKind::io_error: return "io_error";
  }
  return "unknown";
}

bool lexicographic_less(Point3 a, Point3 b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

double point_segment_distance(Point3 p, Point3 a, Point3 b) {
  const Point3 ab = b - a;
  const double len2 = squared_norm(ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

std::string_view to_string(Side side) noexcept {
  return side == Side::left ? "left" : "right";
}

Side parse_side(std::string_view text) {
  if (text == "left") return Side::left;
  if (text == "right") return Side::right;
  throw Error(ErrorKind::invalid_input, "unknown side '" + std::string(text) + "'");
}

std::string_view to_string(Clarity clarity) noexcept {
  return clarity == Clarity::clear ? "clear" : "unclear";
}

Clarity parse_clarity(std::string_view text) {
  if (text == "clear") return Clarity::clear;
  if (text == "unclear") return Clarity::unclear;
  throw Error(ErrorKind::invalid_input, "unknown clarity '" + std::string(text) + "'");
}

void validate(const Curve& curve) {
  if (curve.points.size() < 2) {
    throw Error(ErrorKind::invalid_input, "curve needs at least 2 points");
  }
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (!is_finite(curve.points[i])) {
      throw Error(ErrorKind::invalid_input, "curve has a non-finite point");
    }
    if (i > 0 && curve.points[i] == curve.points[i - 1]) {
      throw Error(ErrorKind::invalid_input, "curve has repeated consecutive points");
    }
  }
}

namespace {

// Barry-Goldman evaluation with knot spacing |p_{i+1} - p_i|^0.5.
Point3 centripetal(Point3 p0, Point3 p1, Point3 p2, Point3 p3, double u) {
  auto knot = [](double t, Point3 a, Point3 b) {
    return t + std::sqrt(distance(a, b));
  };
  const double t0 = 0.0;
  const double t1 = knot(t0, p0, p1);
  const double t2 = knot(t1, p1, p2);
  const double t3 = knot(t2, p2, p3);
  const double t = t1 + u * (t2 - t1);

  const Point3 a1 = ((t1 - t) / (t1 - t0)) * p0 + ((t - t0) / (t1 - t0)) * p1;
  const Point3 a2 = ((t2 - t) / (t2 - t1)) * p1 + ((t - t1) / (t2 - t1)) * p2;
  const Point3 a3 = ((t3 - t) / (t3 - t2)) * p2 + ((t - t2) / (t3 - t2)) * p3;
  const Point3 b1 = ((t2 - t) / (t2 - t0)) * a1 + ((t - t0) / (t2 - t0)) * a2;
  const Point3 b2 = ((t3 - t) / (t3 - t1)) * a2 + ((t - t1) / (t3 - t1)) * a3;
  return ((t2 - t) / (t2 - t1)) * b1 + ((t - t1) / (t2 - t1)) * b2;
}

// Equal subdivision of a dense polyline into pieces of length <= step.
void append_subdivided(std::span<const Point3> dense, double step, std::vector<Point3>& out) {
  const double length = arc_length(dense);
  const int pieces = std::max(1, static_cast<int>(std::ceil(length / step - 1e-9)));
  for (int k = 1; k < pieces; ++k) {
    out.push_back(point_at_length(dense, length * k / pieces));
  }
  out.push_back(dense.back());
}

}  // namespace

Point3 catmull_rom_point(Point3 p0, Point3 p1, Point3 p2, Point3 p3, double u) {
  if (u <= 0.0) return p1;
  if (u >= 1.0) return p2;
  return centripetal(p0, p1, p2, p3, u);
}

Curve interpolate_spline(const ControlPointAnnotation& annotation, double step_mm) {
  if (!(step_mm > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "spline step must be positive");
  }
  const auto& cp = annotation.control_points;
  if (cp.size() < 2) {
    throw Error(ErrorKind::invalid_annotation,
                "annotation for rater '" + annotation.rater + "' has fewer than 2 control points");
  }
  for (std::size_t i = 0; i < cp.size(); ++i) {
    if (!is_finite(cp[i])) {
      throw Error(ErrorKind::invalid_annotation, "non-finite control point");
    }
    if (i > 0 && cp[i] == cp[i - 1]) {
      throw Error(ErrorKind::invalid_annotation, "repeated consecutive control point");
    }
  }

  Curve out;
  out.side = annotation.side;
  out.source = annotation.rater;
  out.points.push_back(cp.front());

  if (cp.size() == 2) {
    const std::array<Point3, 2> line{cp[0], cp[1]};
    append_subdivided(line, step_mm, out.points);
    return out;
  }

  // Phantom end points are reflections of the neighbouring control point so
  // the boundary spans keep non-zero centripetal knot intervals.
  const std::size_t n = cp.size();
  auto control = [&](std::ptrdiff_t i) -> Point3 {
    if (i < 0) return 2.0 * cp[0] - cp[1];
    if (i >= static_cast<std::ptrdiff_t>(n)) return 2.0 * cp[n - 1] - cp[n - 2];
    return cp[static_cast<std::size_t>(i)];
  };

  std::vector<Point3> dense;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto s = static_cast<std::ptrdiff_t>(i);
    const Point3 p0 = control(s - 1), p1 = control(s), p2 = control(s + 1), p3 = control(s + 2);
    const double chord = distance(p1, p2);
    const int samples = std::max(32, static_cast<int>(std::ceil(chord / 0.01)));
    dense.clear();
    dense.reserve(static_cast<std::size_t>(samples) + 1);
    for (int k = 0; k <= samples; ++k) {
      dense.push_back(catmull_rom_point(p0, p1, p2, p3, static_cast<double>(k) / samples));
    }
    append_subdivided(dense, step_mm, out.points);
  }
  return out;
}

double arc_length(std::span<const Point3> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

std::vector<double> cumulative_length(std::span<const Point3> points) {
  std::vector<double> s(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    s[i] = s[i - 1] + distance(points[i - 1], points[i]);
  }
  return s;
}

Point3 point_at_length(std::span<const Point3> points, double s) {
  if (points.empty()) throw Error(ErrorKind::invalid_input, "empty polyline");
  if (s <= 0.0) return points.front();
  double walked = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double seg = distance(points[i - 1], points[i]);
    if (walked + seg >= s && seg > 0.0) {
      return lerp(points[i - 1], points[i], (s - walked) / seg);
    }
    walked += seg;
  }
  return points.back();
}

namespace {

// Samples the polyline at sorted arc-length positions in one pass.
std::vector<Point3> sample_at(std::span<const Point3> pts, std::span<const double> positions) {
  const std::vector<double> cum = cumulative_length(pts);
  std::vector<Point3> out;
  out.reserve(positions.size());
  std::size_t seg = 1;
  for (double s : positions) {
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? std::clamp((s - cum[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(lerp(pts[seg - 1], pts[seg], t));
  }
  return out;
}

}  // namespace

Curve resample_uniform(const Curve& curve, int n) {
  if (n < 2) throw Error(ErrorKind::invalid_parameter, "resample_uniform needs n >= 2");
  validate(curve);
  const double length = arc_length(curve);
  std::vector<double> positions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) positions[static_cast<std::size_t>(i)] = length * i / (n - 1);
  Curve out{sample_at(curve.points, positions), curve.side, curve.source};
  out.points.front() = curve.points.front();
  out.points.back() = curve.points.back();
  return out;
}

Curve resample_step(const Curve& curve, double step_mm) {
  if (!(step_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "resample step must be positive");
  validate(curve);
  const double length = arc_length(curve);
  std::vector<double> positions;
  for (int i = 0;; ++i) {
    const double s = i * step_mm;
    if (s >= length - 1e-9 * std::max(1.0, length)) break;
    positions.push_back(s);
  }
  positions.push_back(length);
  Curve out{sample_at(curve.points, positions), curve.side, curve.source};
  out.points.front() = curve.points.front();
  out.points.back() = curve.points.back();
  return out;
}

Curve truncate_to_length(const Curve& curve, double length_mm) {
  if (!(length_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "truncation length must be positive");
  Curve out{{}, curve.side, curve.source};
  out.points.push_back(curve.points.front());
  double walked = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const double seg = distance(curve.points[i - 1], curve.points[i]);
    if (walked + seg >= length_mm) {
      const double t = seg > 0.0 ? (length_mm - walked) / seg : 1.0;
      const Point3 cut = t >= 1.0 ? curve.points[i] : lerp(curve.points[i - 1], curve.points[i], t);
      if (!(cut == out.points.back())) out.points.push_back(cut);
      return out;
    }
    walked += seg;
    out.points.push_back(curve.points[i]);
  }
  return out;
}

std::vector<Curve> trim_to_shortest(std::span<const Curve> curves) {
  if (curves.size() < 2) throw Error(ErrorKind::invalid_input, "trim_to_shortest needs >= 2 curves");
  double shortest = std::numeric_limits<double>::infinity();
  for (const Curve& c : curves) {
    if (c.side != curves.front().side) {
      throw Error(ErrorKind::invalid_input, "trim_to_shortest given curves from both sides");
    }
    validate(c);
    shortest = std::min(shortest, arc_length(c));
  }
  std::vector<Curve> out;
  out.reserve(curves.size());
  // Lengths that differ only by rounding count as equal and stay untouched.
  const double tolerance = 1e-9 * std::max(1.0, shortest);
  for (const Curve& c : curves) {
    out.push_back(arc_length(c) > shortest + tolerance ? truncate_to_length(c, shortest) : c);
  }
  return out;
}

Curve mirror_sagittal(const Curve& curve, double plane_x_mm) {
  Curve out = curve;
  for (Point3& p : out.points) p.x = 2.0 * plane_x_mm - p.x;
  return out;
}

Curve reversed(const Curve& curve) {
  Curve out = curve;
  std::reverse(out.points.begin(), out.points.end());
  return out;
}

Curve decimate(const Curve& curve, double min_spacing_mm) {
  if (!(min_spacing_mm >= 0.0)) throw Error(ErrorKind::invalid_parameter, "decimation spacing must be >= 0");
  Curve out{{}, curve.side, curve.source};
  if (curve.points.empty()) return out;
  out.points.push_back(curve.points.front());
  double since = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    since += distance(curve.points[i - 1], curve.points[i]);
    if (since >= min_spacing_mm || i + 1 == curve.points.size()) {
      out.points.push_back(curve.points[i]);
      since = 0.0;
    }
  }
  return out;
}

Point3 centroid(std::span<const Point3> points) {
  if (points.empty()) throw Error(ErrorKind::invalid_input, "centroid of empty point set");
  Point3 sum;
  for (Point3 p : points) sum = sum + p;
  return (1.0 / static_cast<double>(points.size())) * sum;
}

}  // namespace canaleval
