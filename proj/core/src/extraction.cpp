#include "canaleval/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "canaleval/error.hpp"

namespace canaleval {

Mask segment_probability_volume(const Volume& probability, double threshold_level) {
  if (!(threshold_level > 0.0 && threshold_level < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "threshold must lie in (0, 1)");
  }
  return threshold(probability, threshold_level);
}

namespace {

struct FreeEnd {
  Point3 position;
  Point3 outward;  // unit tangent pointing away from the segment body
};

Point3 unit(Point3 v) {
  const double n = norm(v);
  return n > 0.0 ? (1.0 / n) * v : Point3{};
}

double angle_deg(Point3 a, Point3 b) {
  const double c = std::clamp(dot(unit(a), unit(b)), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

FreeEnd end_of(const std::vector<Point3>& pts, bool back) {
  const std::size_t n = pts.size();
  const std::size_t span = std::min<std::size_t>(2, n - 1);
  if (back) return {pts[n - 1], unit(pts[n - 1] - pts[n - 1 - span])};
  return {pts[0], unit(pts[0] - pts[span])};
}

struct JoinScore {
  double gap = std::numeric_limits<double>::infinity();
  double angle = std::numeric_limits<double>::infinity();
};

// Continuation from `from` (a route end) into the segment end `to`.
std::optional<JoinScore> try_join(const FreeEnd& from, const FreeEnd& to, double gap_mm, double max_angle_deg) {
  const double gap = distance(from.position, to.position);
  if (gap > gap_mm) return std::nullopt;
  const Point3 inward = -1.0 * to.outward;
  double worst = angle_deg(from.outward, inward);
  if (gap > 1e-9) {
    const Point3 chord = to.position - from.position;
    worst = std::max({worst, angle_deg(from.outward, chord), angle_deg(chord, inward)});
  }
  if (worst > max_angle_deg) return std::nullopt;
  return JoinScore{gap, worst};
}

bool better(const JoinScore& a, const JoinScore& b) {
  if (a.gap != b.gap) return a.gap < b.gap;
  return a.angle < b.angle;
}

void append_points(std::vector<Point3>& route, std::vector<Point3> pts) {
  if (!route.empty() && route.back() == pts.front()) pts.erase(pts.begin());
  route.insert(route.end(), pts.begin(), pts.end());
}

}  // namespace

std::vector<RouteCandidate> concatenate_routes(std::span<const Curve> segments, double gap_mm,
                                               double max_angle_deg) {
  if (!(gap_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "gap_mm must be positive");
  if (!(max_angle_deg > 0.0 && max_angle_deg < 180.0)) {
    throw Error(ErrorKind::invalid_parameter, "max_angle_deg must lie in (0, 180)");
  }
  for (const Curve& s : segments) validate(s);

  std::vector<double> lengths(segments.size());
  std::vector<Point3> min_end(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    lengths[i] = arc_length(segments[i]);
    const Point3 a = segments[i].points.front(), b = segments[i].points.back();
    min_end[i] = lexicographic_less(a, b) ? a : b;
  }
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lengths[a] != lengths[b]) return lengths[a] > lengths[b];
    return lexicographic_less(min_end[a], min_end[b]);
  });

  std::vector<bool> used(segments.size(), false);
  std::vector<RouteCandidate> routes;
  for (std::size_t seed : order) {
    if (used[seed]) continue;
    used[seed] = true;
    std::vector<Point3> pts = segments[seed].points;
    std::vector<std::size_t> ids{seed};

    for (bool grow_back : {true, false}) {
      for (;;) {
        const FreeEnd here = end_of(pts, grow_back);
        std::optional<JoinScore> best;
        std::size_t best_seg = 0;
        bool best_at_back = false;
        for (std::size_t cand : order) {
          if (used[cand]) continue;
          for (bool at_back : {false, true}) {
            const auto score = try_join(here, end_of(segments[cand].points, at_back), gap_mm, max_angle_deg);
            if (score && (!best || better(*score, *best))) {
              best = score;
              best_seg = cand;
              best_at_back = at_back;
            }
          }
        }
        if (!best) break;
        used[best_seg] = true;
        std::vector<Point3> piece = segments[best_seg].points;
        if (grow_back) {
          // Enter the new segment at the joined end.
          if (best_at_back) std::reverse(piece.begin(), piece.end());
          append_points(pts, std::move(piece));
          ids.push_back(best_seg);
        } else {
          if (!best_at_back) std::reverse(piece.begin(), piece.end());
          std::reverse(pts.begin(), pts.end());
          std::reverse(piece.begin(), piece.end());
          append_points(pts, std::move(piece));
          std::reverse(pts.begin(), pts.end());
          ids.insert(ids.begin(), best_seg);
        }
      }
    }

    RouteCandidate route;
    route.curve = Curve{std::move(pts), segments[seed].side, segments[seed].source};
    route.total_length_mm = arc_length(route.curve);
    route.segment_ids = std::move(ids);
    routes.push_back(std::move(route));
  }
  return routes;
}

std::vector<RouteCandidate> filter_anatomical(std::span<const RouteCandidate> candidates, double min_length_mm,
                                              double max_length_mm, double min_straightness) {
  if (!(min_length_mm > 0.0 && min_length_mm < max_length_mm)) {
    throw Error(ErrorKind::invalid_parameter, "length window must satisfy 0 < min < max");
  }
  std::vector<RouteCandidate> out;
  for (const RouteCandidate& c : candidates) {
    const double length = c.total_length_mm;
    if (length < min_length_mm || length > max_length_mm) continue;
    const double separation = distance(c.curve.points.front(), c.curve.points.back());
    if (separation < min_straightness * length) continue;
    out.push_back(c);
  }
  return out;
}

double symmetry_score(const Curve& a, const Curve& b, double midplane_x_mm, double step_mm) {
  return smcd(densified(mirror_sagittal(a, midplane_x_mm), step_mm), densified(b, step_mm));
}

Curve orient_anterior_first(const Curve& curve) {
  return curve.points.front().y > curve.points.back().y ? reversed(curve) : curve;
}

double grid_midplane_x(const GridGeometry& g) {
  return g.origin_mm.x + 0.5 * static_cast<double>(g.dims[0] - 1) * g.spacing_mm[0];
}

CanalPair select_symmetric_pair(std::span<const RouteCandidate> candidates, double midplane_x_mm, double step_mm) {
  if (candidates.size() < 2) {
    throw Error(ErrorKind::extraction_failure, "fewer than two canal candidates");
  }
  struct Entry {
    const RouteCandidate* route;
    Point3 min_end;
    double mean_x;
  };
  std::vector<Entry> entries;
  for (const RouteCandidate& c : candidates) {
    const Point3 a = c.curve.points.front(), b = c.curve.points.back();
    entries.push_back({&c, lexicographic_less(a, b) ? a : b, centroid(c.curve.points).x});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (!(a.min_end == b.min_end)) return lexicographic_less(a.min_end, b.min_end);
    return a.route->total_length_mm < b.route->total_length_mm;
  });

  std::optional<CanalPair> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      const Entry& a = entries[i];
      const Entry& b = entries[j];
      const bool opposite = (a.mean_x < midplane_x_mm && b.mean_x > midplane_x_mm) ||
                            (a.mean_x > midplane_x_mm && b.mean_x < midplane_x_mm);
      if (!opposite) continue;
      const double score = symmetry_score(a.route->curve, b.route->curve, midplane_x_mm, step_mm);
      if (best && !(score < best->symmetry_score_mm)) continue;
      const Entry& l = a.mean_x > b.mean_x ? a : b;
      const Entry& r = a.mean_x > b.mean_x ? b : a;
      CanalPair pair{orient_anterior_first(l.route->curve), orient_anterior_first(r.route->curve), score};
      pair.left.side = Side::left;
      pair.right.side = Side::right;
      best = std::move(pair);
    }
  }
  if (!best) throw Error(ErrorKind::extraction_failure, "no candidate pair straddles the mid-sagittal plane");
  return *best;
}

CanalPair extract_canals(const Volume& probability, const ExtractionParams& params, ExtractionTrace* trace) {
  ExtractionTrace local;
  ExtractionTrace& t = trace ? *trace : local;

  const Mask mask = segment_probability_volume(probability, params.threshold);
  t.foreground_voxels = count_foreground(mask);
  if (t.foreground_voxels == 0) throw Error(ErrorKind::extraction_failure, "segmentation mask is empty");

  const Mask skeleton = thin(mask);
  t.skeleton_voxels = count_foreground(skeleton);
  const SkeletonGraph graph = build_graph(skeleton);

  std::vector<Curve> segments;
  for (ExtractedPath& p : extract_paths(graph, params.paths)) segments.push_back(std::move(p.curve));
  t.segments = segments.size();

  const auto routes = concatenate_routes(segments, params.gap_mm, params.max_angle_deg);
  t.routes = routes.size();
  const auto canals = filter_anatomical(routes, params.min_length_mm, params.max_length_mm, params.min_straightness);
  t.anatomical_routes = canals.size();

  const double plane = params.midplane_x_mm.value_or(grid_midplane_x(probability.grid.geometry()));
  CanalPair pair = select_symmetric_pair(canals, plane, params.metric_step_mm);
  pair.left.source = "system";
  pair.right.source = "system";
  return pair;
}

}  // namespace canaleval
