#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "canaleval/geometry.hpp"
#include "canaleval/volume.hpp"

namespace canaleval {

/// Topology-preserving thinning of a binary mask down to a curve skeleton.
///
/// Six directional sub-iterations per pass in the fixed order up (+z),
/// down (-z), north (+y), south (-y), east (+x), west (-x). A border voxel is
/// deleted when it is not a curve end (exactly one 26-neighbour), its removal
/// leaves the local Euler characteristic unchanged, and its remaining
/// 26-neighbourhood stays a single 26-connected object. Candidates of one
/// sub-iteration are re-checked sequentially before removal. Voxels outside
/// the grid count as background.
Mask thin(const Mask& mask);

namespace thinning {

/// 3x3x3 neighbourhood, index = (dz+1)*9 + (dy+1)*3 + (dx+1); 13 is the center.
using Neighborhood = std::array<std::uint8_t, 27>;

/// Euler characteristic change lookup for the eight 2x2x2 octants.
bool is_euler_invariant(const Neighborhood& n);

/// True when the 26 neighbours (center excluded) form exactly one
/// 26-connected object.
bool has_single_object_component(const Neighborhood& n);

/// Full deletability test used by `thin` (end-point, Euler, connectivity).
bool is_deletable(const Neighborhood& n);

}  // namespace thinning

/// 26-adjacency graph over skeleton voxels.
struct SkeletonGraph {
  GridGeometry geometry;
  /// Linear voxel indices in ascending order.
  std::vector<std::size_t> nodes;
  /// Neighbour lists as positions into `nodes`, ascending.
  std::vector<std::vector<std::int32_t>> adjacency;
  /// Undirected edges (a < b) as positions into `nodes`.
  std::vector<std::array<std::int32_t, 2>> edges;
  std::vector<std::int32_t> endpoints;  // degree 1
  std::vector<std::int32_t> junctions;  // degree >= 3

  std::size_t degree(std::int32_t node) const {
    return adjacency[static_cast<std::size_t>(node)].size();
  }
};

SkeletonGraph build_graph(const Mask& skeleton);

struct PathOptions {
  /// Branch segments shorter than this are treated as thinning spurs.
  double min_branch_mm = 2.0;
  /// Components whose exact longest-path search would explore more than this
  /// many partial paths return the longer of the best path found within the
  /// budget and the longest shortest path between endpoints.
  std::size_t search_budget = 200000;
};

/// A path through the graph as node positions, with its length in mm.
struct GraphPath {
  std::vector<std::int32_t> nodes;
  double length_mm = 0.0;
};

/// Longest endpoint-to-endpoint simple path of the component containing
/// `seed`. Components without endpoints use the longest shortest path.
GraphPath diameter_path(const SkeletonGraph& graph, std::int32_t seed,
                        const PathOptions& options = {});

/// Connected components of the graph, each a sorted list of node positions,
/// ordered by smallest member.
std::vector<std::vector<std::int32_t>> graph_components(const SkeletonGraph& graph);

struct ExtractedPath {
  Curve curve;
  std::size_t component = 0;
  bool is_diameter = false;
};

/// Splits every component into its diameter path plus the remaining branch
/// segments between junctions and endpoints, in world coordinates.
/// Isolated single voxels produce no path.
std::vector<ExtractedPath> extract_paths(const SkeletonGraph& graph, const PathOptions& options = {});

/// World-space polyline of a graph path.
Curve path_to_curve(const SkeletonGraph& graph, const GraphPath& path);

}  // namespace canaleval
