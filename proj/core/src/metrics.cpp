#include "canaleval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "canaleval/error.hpp"

namespace canaleval {
namespace {

double coord(Point3 p, int axis) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; }

// Linear scans are faster than the tree for short curves.
constexpr std::size_t kIndexThreshold = 64;

void require_nonempty(std::span<const Point3> pts, const char* what) {
  if (pts.empty()) throw Error(ErrorKind::invalid_input, std::string(what) + ": empty curve");
}

}  // namespace

PointIndex::PointIndex(std::span<const Point3> points) : points_(points.begin(), points.end()) {
  std::vector<std::int32_t> ids(points_.size());
  std::iota(ids.begin(), ids.end(), 0);
  nodes_.reserve(points_.size());
  if (!ids.empty()) root_ = build(ids, 0, ids.size(), 0);
}

std::int32_t PointIndex::build(std::vector<std::int32_t>& ids, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return -1;
  const auto axis = static_cast<std::uint8_t>(depth % 3);
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(ids.begin() + static_cast<std::ptrdiff_t>(lo), ids.begin() + static_cast<std::ptrdiff_t>(mid),
                   ids.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::int32_t a, std::int32_t b) {
                     return coord(points_[static_cast<std::size_t>(a)], axis) <
                            coord(points_[static_cast<std::size_t>(b)], axis);
                   });
  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({ids[mid], -1, -1, axis});
  const std::int32_t left = build(ids, lo, mid, depth + 1);
  const std::int32_t right = build(ids, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(self)].left = left;
  nodes_[static_cast<std::size_t>(self)].right = right;
  return self;
}

void PointIndex::search(std::int32_t node, Point3 q, double& best_sq) const {
  while (node >= 0) {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const Point3 p = points_[static_cast<std::size_t>(n.point)];
    best_sq = std::min(best_sq, squared_norm(q - p));
    const double delta = coord(q, n.axis) - coord(p, n.axis);
    const std::int32_t near = delta < 0 ? n.left : n.right;
    const std::int32_t far = delta < 0 ? n.right : n.left;
    if (far >= 0 && delta * delta <= best_sq) search(far, q, best_sq);
    node = near;
  }
}

double PointIndex::nearest_distance(Point3 query) const {
  if (root_ < 0) throw Error(ErrorKind::invalid_input, "nearest_distance on an empty index");
  double best_sq = std::numeric_limits<double>::infinity();
  search(root_, query, best_sq);
  return std::sqrt(best_sq);
}

double point_to_curve_distance(Point3 x, std::span<const Point3> curve) {
  require_nonempty(curve, "point_to_curve_distance");
  double best_sq = std::numeric_limits<double>::infinity();
  for (Point3 s : curve) best_sq = std::min(best_sq, squared_norm(x - s));
  return std::sqrt(best_sq);
}

namespace {

// Distances from every truth point to the estimate, in truth order.
std::vector<double> distances_to(std::span<const Point3> truth, std::span<const Point3> estimate) {
  require_nonempty(truth, "curve metric");
  require_nonempty(estimate, "curve metric");
  std::vector<double> d(truth.size());
  if (estimate.size() < kIndexThreshold) {
    for (std::size_t i = 0; i < truth.size(); ++i) d[i] = point_to_curve_distance(truth[i], estimate);
  } else {
    const PointIndex index(estimate);
    for (std::size_t i = 0; i < truth.size(); ++i) d[i] = index.nearest_distance(truth[i]);
  }
  return d;
}

double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

double mcd(const Curve& truth, const Curve& estimate) {
  return mean(distances_to(truth.points, estimate.points));
}

double smcd(const Curve& truth, const Curve& estimate) {
  return 0.5 * (mcd(truth, estimate) + mcd(estimate, truth));
}

double margin_proportion(const Curve& truth, const Curve& estimate, double margin_mm) {
  if (!(margin_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "safety margin must be positive");
  const std::vector<double> d = distances_to(truth.points, estimate.points);
  const auto inside = std::count_if(d.begin(), d.end(), [&](double v) { return v <= margin_mm; });
  return static_cast<double>(inside) / static_cast<double>(d.size());
}

std::vector<double> position_profile(const Curve& truth, const Curve& reference, int n) {
  const Curve sampled = resample_uniform(truth, n);
  return distances_to(sampled.points, reference.points);
}

Curve densified(const Curve& curve, double step_mm) { return resample_step(curve, step_mm); }

CurveMetricRow compare_curves(const std::string& scan_id, const Curve& truth, const Curve& estimate,
                              double margin_mm, double step_mm) {
  const Curve t = densified(truth, step_mm);
  const Curve e = densified(estimate, step_mm);
  CurveMetricRow row;
  row.scan_id = scan_id;
  row.side = truth.side;
  row.truth_source = truth.source;
  row.estimate_source = estimate.source;
  row.mcd_mm = mcd(t, e);
  row.smcd_mm = smcd(t, e);
  row.margin_proportion = margin_proportion(t, e, margin_mm);
  return row;
}

}  // namespace canaleval
