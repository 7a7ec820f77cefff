#include "canaleval/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "canaleval/error.hpp"
#include "canaleval/extraction.hpp"

namespace canaleval {

VoteResult label_vote(std::span<const Mask> masks) {
  if (masks.size() < 2) throw Error(ErrorKind::invalid_input, "label vote needs at least two rater masks");
  const GridGeometry& g = masks.front().geometry();
  for (const Mask& m : masks) require_same_geometry(g, m.geometry(), "label_vote");

  VoteResult out{Mask(g), Grid<std::uint16_t>(g), masks.size(), 0};
  for (const Mask& m : masks) {
    for (std::size_t i = 0; i < m.size(); ++i) out.votes[i] += m[i] != 0;
  }
  for (std::size_t i = 0; i < out.votes.size(); ++i) {
    const std::size_t v = out.votes[i];
    out.consensus[i] = vote_is_canal(v, masks.size()) && v > 0 ? 1 : 0;
    out.ties += 2 * v == masks.size();
  }
  return out;
}

ConsensusCurves consensus_curves(const VoteResult& vote, double midplane_x_mm, const PathOptions& options,
                                 double vertex_spacing_mm) {
  ConsensusCurves out;
  if (count_foreground(vote.consensus) == 0) {
    throw Error(ErrorKind::invalid_input, "consensus mask is empty");
  }
  const Mask skeleton = thin(vote.consensus);
  const LabelComponents components = connected_components(skeleton);

  std::vector<std::int32_t> ranked(static_cast<std::size_t>(components.count));
  std::iota(ranked.begin(), ranked.end(), 1);
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::int32_t a, std::int32_t b) {
    return components.sizes[static_cast<std::size_t>(a)] > components.sizes[static_cast<std::size_t>(b)];
  });
  const std::size_t keep = std::min<std::size_t>(2, ranked.size());
  out.dropped_components = ranked.size() - keep;
  if (out.dropped_components > 0) {
    out.warnings.push_back("dropped " + std::to_string(out.dropped_components) + " small agreement islands");
  }

  const SkeletonGraph graph = build_graph(skeleton);
  for (std::size_t k = 0; k < keep; ++k) {
    const std::int32_t label = ranked[k];
    std::int32_t seed = -1;
    for (std::size_t p = 0; p < graph.nodes.size(); ++p) {
      if (components.labels[graph.nodes[p]] == label) {
        seed = static_cast<std::int32_t>(p);
        break;
      }
    }
    const GraphPath path = diameter_path(graph, seed, options);
    if (path.nodes.size() < 2) {
      out.warnings.push_back("skeleton component of a single voxel skipped");
      continue;
    }
    Curve curve = orient_anterior_first(decimate(path_to_curve(graph, path), vertex_spacing_mm));
    curve.side = centroid(curve.points).x > midplane_x_mm ? Side::left : Side::right;
    curve.source = "consensus";
    out.curves.push_back(std::move(curve));
  }

  if (out.curves.size() == 2 && out.curves[0].side == out.curves[1].side) {
    // Both bodies on one side of the plane: the larger x is still the left canal.
    const bool first_left = centroid(out.curves[0].points).x > centroid(out.curves[1].points).x;
    out.curves[0].side = first_left ? Side::left : Side::right;
    out.curves[1].side = first_left ? Side::right : Side::left;
    out.warnings.push_back("both consensus components lie on one side of the mid-plane");
  }
  if (out.curves.size() < 2) {
    out.warnings.push_back("partial consensus: " + std::to_string(out.curves.size()) + " canal curve(s) recovered");
  }
  std::sort(out.curves.begin(), out.curves.end(),
            [](const Curve& a, const Curve& b) { return a.side == Side::left && b.side == Side::right; });
  return out;
}

Mask rater_mask(std::span<const Curve> curves, const GridGeometry& geometry, double diameter_mm) {
  Mask mask(geometry);
  for (const Curve& c : curves) paint_tube(c, diameter_mm, mask);
  return mask;
}

GridGeometry bounding_grid(std::span<const Curve> curves, double spacing_mm, double margin_mm) {
  if (curves.empty()) throw Error(ErrorKind::invalid_input, "bounding_grid of no curves");
  if (!(spacing_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "spacing must be positive");
  constexpr double inf = std::numeric_limits<double>::infinity();
  Point3 lo{inf, inf, inf}, hi{-inf, -inf, -inf};
  for (const Curve& c : curves) {
    for (Point3 p : c.points) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
  }
  // Snap the origin to the spacing lattice so grids for the same scan agree.
  GridGeometry g;
  g.spacing_mm = {spacing_mm, spacing_mm, spacing_mm};
  const auto snap = [&](double v) { return std::floor((v - margin_mm) / spacing_mm) * spacing_mm; };
  g.origin_mm = {snap(lo.x), snap(lo.y), snap(lo.z)};
  g.dims = {static_cast<std::int64_t>(std::ceil((hi.x + margin_mm - g.origin_mm.x) / spacing_mm)) + 1,
            static_cast<std::int64_t>(std::ceil((hi.y + margin_mm - g.origin_mm.y) / spacing_mm)) + 1,
            static_cast<std::int64_t>(std::ceil((hi.z + margin_mm - g.origin_mm.z) / spacing_mm)) + 1};
  return g;
}

ScanConsensus scan_consensus(const AnnotationSet& scan, std::span<const std::string> experts,
                             const ReferenceOptions& options) {
  ScanConsensus out;
  std::map<std::string, std::vector<Curve>> by_rater;
  std::vector<Curve> all;
  double side_x[2] = {0.0, 0.0};
  int side_n[2] = {0, 0};
  for (Side side : {Side::left, Side::right}) {
    std::vector<Curve> group;
    std::vector<std::string> ids;
    for (const std::string& id : experts) {
      if (const Curve* c = scan.find(id, side)) {
        group.push_back(*c);
        ids.push_back(id);
      }
    }
    if (group.size() < 2) {
      out.curves.warnings.push_back(std::string(to_string(side)) + ": fewer than two expert curves, side not voted");
      continue;
    }
    if (options.trim_to_shortest) group = trim_to_shortest(group);
    const int s = side == Side::left ? 0 : 1;
    for (std::size_t k = 0; k < group.size(); ++k) {
      side_x[s] += centroid(group[k].points).x;
      ++side_n[s];
      by_rater[ids[k]].push_back(group[k]);
      all.push_back(std::move(group[k]));
    }
  }
  out.raters = by_rater.size();
  if (out.raters < 2) {
    out.curves.warnings.push_back("fewer than two raters, no consensus");
    return out;
  }
  out.grid = bounding_grid(all, options.spacing_mm, 0.5 * options.diameter_mm + 2.0);
  std::vector<Mask> masks;
  for (const auto& [id, curves] : by_rater) masks.push_back(rater_mask(curves, out.grid, options.diameter_mm));
  VoteResult vote = label_vote(masks);
  out.ties = vote.ties;
  out.midplane_x_mm = side_n[0] > 0 && side_n[1] > 0 ? 0.5 * (side_x[0] / side_n[0] + side_x[1] / side_n[1])
                                                     : grid_midplane_x(out.grid);
  if (count_foreground(vote.consensus) == 0) {
    out.curves.warnings.push_back("empty consensus mask");
  } else {
    std::vector<std::string> earlier = std::move(out.curves.warnings);
    out.curves = consensus_curves(vote, out.midplane_x_mm, options.paths, options.vertex_spacing_mm);
    out.curves.warnings.insert(out.curves.warnings.begin(), earlier.begin(), earlier.end());
  }
  out.consensus = std::move(vote.consensus);
  return out;
}

}  // namespace canaleval
