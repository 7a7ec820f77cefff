#include "canaleval/skeleton.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <utility>

namespace canaleval {
namespace thinning {
namespace {

// Euler characteristic contribution of each 2x2x2 octant configuration with
// the center voxel set (odd indices only).
constexpr std::array<int, 256> make_euler_lut() {
  std::array<int, 256> lut{};
  constexpr int values[128] = {
      1,  -1, -1, 1,  -3, -1, -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      -3, -1, 3,  1,  1,  -1, 3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      -3, 3,  -1, 1,  1,  3,  -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      1,  3,  3,  1,  5,  3,  3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      -7, -1, -1, 1,  -3, -1, -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      -3, -1, 3,  1,  1,  -1, 3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      -3, 3,  -1, 1,  1,  3,  -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
      1,  3,  3,  1,  5,  3,  3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,  //
  };
  for (int i = 0; i < 128; ++i) lut[static_cast<std::size_t>(2 * i + 1)] = values[i];
  return lut;
}

constexpr std::array<int, 256> kEulerLut = make_euler_lut();

// Neighbour positions per octant, most significant bit first (128 .. 2).
constexpr int kOctants[8][7] = {
    {24, 25, 15, 16, 21, 22, 12},  // SWU
    {26, 23, 17, 14, 25, 22, 16},  // SEU
    {18, 21, 9, 12, 19, 22, 10},   // NWU
    {20, 23, 19, 22, 11, 14, 10},  // NEU
    {6, 15, 7, 16, 3, 12, 4},      // SWB
    {8, 7, 17, 16, 5, 4, 14},      // SEB
    {0, 9, 3, 12, 1, 10, 4},       // NWB
    {2, 1, 11, 10, 5, 4, 14},      // NEB
};

struct CubeAdjacency {
  std::array<std::array<std::int8_t, 26>, 27> next{};
  std::array<int, 27> count{};
};

constexpr CubeAdjacency make_cube_adjacency() {
  CubeAdjacency adj{};
  for (int a = 0; a < 27; ++a) {
    const int ax = a % 3, ay = (a / 3) % 3, az = a / 9;
    for (int b = 0; b < 27; ++b) {
      if (a == b) continue;
      const int bx = b % 3, by = (b / 3) % 3, bz = b / 9;
      const int dx = ax > bx ? ax - bx : bx - ax;
      const int dy = ay > by ? ay - by : by - ay;
      const int dz = az > bz ? az - bz : bz - az;
      if (dx <= 1 && dy <= 1 && dz <= 1) {
        adj.next[static_cast<std::size_t>(a)][static_cast<std::size_t>(adj.count[static_cast<std::size_t>(a)]++)] =
            static_cast<std::int8_t>(b);
      }
    }
  }
  return adj;
}

constexpr CubeAdjacency kCube = make_cube_adjacency();

}  // namespace

bool is_euler_invariant(const Neighborhood& n) {
  int euler = 0;
  for (const auto& octant : kOctants) {
    unsigned index = 1;
    for (int bit = 0; bit < 7; ++bit) {
      if (n[static_cast<std::size_t>(octant[bit])] != 0) index |= 128u >> bit;
    }
    euler += kEulerLut[index];
  }
  return euler == 0;
}

bool has_single_object_component(const Neighborhood& n) {
  std::array<bool, 27> seen{};
  int components = 0;
  std::array<std::int8_t, 27> stack{};
  for (int start = 0; start < 27; ++start) {
    if (start == 13 || n[static_cast<std::size_t>(start)] == 0 || seen[static_cast<std::size_t>(start)]) continue;
    if (++components > 1) return false;
    int top = 0;
    stack[static_cast<std::size_t>(top++)] = static_cast<std::int8_t>(start);
    seen[static_cast<std::size_t>(start)] = true;
    while (top > 0) {
      const auto cur = static_cast<std::size_t>(stack[static_cast<std::size_t>(--top)]);
      for (int k = 0; k < kCube.count[cur]; ++k) {
        const auto nb = static_cast<std::size_t>(kCube.next[cur][static_cast<std::size_t>(k)]);
        if (nb == 13 || n[nb] == 0 || seen[nb]) continue;
        seen[nb] = true;
        stack[static_cast<std::size_t>(top++)] = static_cast<std::int8_t>(nb);
      }
    }
  }
  return components == 1;
}

bool is_deletable(const Neighborhood& n) {
  int neighbours = 0;
  for (std::size_t i = 0; i < 27; ++i) neighbours += (i != 13 && n[i] != 0);
  if (neighbours == 1) return false;  // curve end
  return is_euler_invariant(n) && has_single_object_component(n);
}

}  // namespace thinning

namespace {

thinning::Neighborhood gather(const std::vector<std::uint8_t>& img, const GridGeometry& g, Index3 c) {
  thinning::Neighborhood n{};
  std::size_t k = 0;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx, ++k) {
        const std::int64_t x = c.x + dx, y = c.y + dy, z = c.z + dz;
        n[k] = g.contains(x, y, z) ? img[g.linear(x, y, z)] : 0;
      }
    }
  }
  return n;
}

}  // namespace

Mask thin(const Mask& mask) {
  const GridGeometry& g = mask.geometry();
  std::vector<std::uint8_t> img(mask.data().begin(), mask.data().end());
  std::vector<std::size_t> foreground;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (img[i] != 0) {
      img[i] = 1;
      foreground.push_back(i);
    }
  }

  // up, down, north, south, east, west
  constexpr std::array<std::array<int, 3>, 6> kDirections{{
      {0, 0, 1}, {0, 0, -1}, {0, 1, 0}, {0, -1, 0}, {1, 0, 0}, {-1, 0, 0}}};

  std::vector<std::size_t> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& d : kDirections) {
      candidates.clear();
      for (std::size_t idx : foreground) {
        if (img[idx] == 0) continue;
        const Index3 c = g.index(idx);
        const std::int64_t x = c.x + d[0], y = c.y + d[1], z = c.z + d[2];
        if (g.contains(x, y, z) && img[g.linear(x, y, z)] != 0) continue;  // not a border voxel
        if (thinning::is_deletable(gather(img, g, c))) candidates.push_back(idx);
      }
      for (std::size_t idx : candidates) {
        if (thinning::is_deletable(gather(img, g, g.index(idx)))) {
          img[idx] = 0;
          changed = true;
        }
      }
    }
    std::erase_if(foreground, [&](std::size_t i) { return img[i] == 0; });
  }
  return Mask(g, std::move(img));
}

SkeletonGraph build_graph(const Mask& skeleton) {
  SkeletonGraph graph;
  graph.geometry = skeleton.geometry();
  const GridGeometry& g = graph.geometry;
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (skeleton[i] != 0) graph.nodes.push_back(i);
  }
  graph.adjacency.resize(graph.nodes.size());
  auto position = [&](std::size_t linear) -> std::int32_t {
    const auto it = std::lower_bound(graph.nodes.begin(), graph.nodes.end(), linear);
    if (it == graph.nodes.end() || *it != linear) return -1;
    return static_cast<std::int32_t>(it - graph.nodes.begin());
  };

  for (std::size_t p = 0; p < graph.nodes.size(); ++p) {
    const Index3 c = g.index(graph.nodes[p]);
    auto& adj = graph.adjacency[p];
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const std::int64_t x = c.x + dx, y = c.y + dy, z = c.z + dz;
          if (!g.contains(x, y, z) || skeleton.at(x, y, z) == 0) continue;
          adj.push_back(position(g.linear(x, y, z)));
        }
      }
    }
    std::sort(adj.begin(), adj.end());
    for (std::int32_t q : adj) {
      if (static_cast<std::int32_t>(p) < q) graph.edges.push_back({static_cast<std::int32_t>(p), q});
    }
    if (adj.size() == 1) graph.endpoints.push_back(static_cast<std::int32_t>(p));
    if (adj.size() >= 3) graph.junctions.push_back(static_cast<std::int32_t>(p));
  }
  return graph;
}

std::vector<std::vector<std::int32_t>> graph_components(const SkeletonGraph& graph) {
  std::vector<std::vector<std::int32_t>> out;
  std::vector<bool> seen(graph.nodes.size(), false);
  for (std::size_t s = 0; s < graph.nodes.size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::int32_t> comp;
    std::vector<std::int32_t> stack{static_cast<std::int32_t>(s)};
    seen[s] = true;
    while (!stack.empty()) {
      const std::int32_t cur = stack.back();
      stack.pop_back();
      comp.push_back(cur);
      for (std::int32_t nb : graph.adjacency[static_cast<std::size_t>(cur)]) {
        if (!seen[static_cast<std::size_t>(nb)]) {
          seen[static_cast<std::size_t>(nb)] = true;
          stack.push_back(nb);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

namespace {

double edge_length(const SkeletonGraph& graph, std::int32_t a, std::int32_t b) {
  return distance(graph.geometry.world(graph.nodes[static_cast<std::size_t>(a)]),
                  graph.geometry.world(graph.nodes[static_cast<std::size_t>(b)]));
}

double path_length(const SkeletonGraph& graph, const std::vector<std::int32_t>& nodes) {
  double total = 0.0;
  for (std::size_t i = 1; i < nodes.size(); ++i) total += edge_length(graph, nodes[i - 1], nodes[i]);
  return total;
}

struct ShortestPaths {
  std::vector<double> dist;
  std::vector<std::int32_t> pred;
};

ShortestPaths dijkstra(const SkeletonGraph& graph, std::int32_t source) {
  const std::size_t n = graph.nodes.size();
  ShortestPaths sp{std::vector<double>(n, std::numeric_limits<double>::infinity()),
                   std::vector<std::int32_t>(n, -1)};
  using Item = std::pair<double, std::int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  sp.dist[static_cast<std::size_t>(source)] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > sp.dist[static_cast<std::size_t>(u)]) continue;
    for (std::int32_t v : graph.adjacency[static_cast<std::size_t>(u)]) {
      const double nd = d + edge_length(graph, u, v);
      if (nd < sp.dist[static_cast<std::size_t>(v)]) {
        sp.dist[static_cast<std::size_t>(v)] = nd;
        sp.pred[static_cast<std::size_t>(v)] = u;
        queue.push({nd, v});
      }
    }
  }
  return sp;
}

std::vector<std::int32_t> walk_back(const ShortestPaths& sp, std::int32_t target) {
  std::vector<std::int32_t> path;
  for (std::int32_t v = target; v >= 0; v = sp.pred[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

// Index of the farthest reachable node; lowest position wins ties.
std::int32_t farthest(const ShortestPaths& sp, const std::vector<std::int32_t>& among) {
  std::int32_t best = among.front();
  for (std::int32_t v : among) {
    if (sp.dist[static_cast<std::size_t>(v)] > sp.dist[static_cast<std::size_t>(best)]) best = v;
  }
  return best;
}

GraphPath double_sweep(const SkeletonGraph& graph, const std::vector<std::int32_t>& component) {
  const std::int32_t a = farthest(dijkstra(graph, component.front()), component);
  const ShortestPaths from_a = dijkstra(graph, a);
  const std::int32_t b = farthest(from_a, component);
  GraphPath out{walk_back(from_a, b), 0.0};
  out.length_mm = path_length(graph, out.nodes);
  return out;
}

GraphPath longest_shortest(const SkeletonGraph& graph, const std::vector<std::int32_t>& ends) {
  GraphPath best;
  best.length_mm = -1.0;
  for (std::int32_t a : ends) {
    const ShortestPaths sp = dijkstra(graph, a);
    for (std::int32_t b : ends) {
      if (b <= a) continue;
      if (sp.dist[static_cast<std::size_t>(b)] > best.length_mm) {
        best.nodes = walk_back(sp, b);
        best.length_mm = sp.dist[static_cast<std::size_t>(b)];
      }
    }
  }
  best.length_mm = path_length(graph, best.nodes);
  return best;
}

// Maximal runs of degree-2 voxels between two "break" nodes.
struct Chain {
  std::vector<std::int32_t> nodes;  // includes both break nodes
  double length_mm = 0.0;
};

std::vector<Chain> split_chains(const SkeletonGraph& graph, const std::vector<std::int32_t>& component,
                                const std::vector<bool>& is_break,
                                const std::set<std::pair<std::int32_t, std::int32_t>>& excluded) {
  std::vector<Chain> chains;
  std::set<std::pair<std::int32_t, std::int32_t>> used = excluded;
  auto key = [](std::int32_t a, std::int32_t b) { return std::pair{std::min(a, b), std::max(a, b)}; };
  for (std::int32_t start : component) {
    if (!is_break[static_cast<std::size_t>(start)]) continue;
    for (std::int32_t first : graph.adjacency[static_cast<std::size_t>(start)]) {
      if (used.contains(key(start, first))) continue;
      Chain chain{{start, first}, 0.0};
      used.insert(key(start, first));
      std::int32_t prev = start, cur = first;
      while (!is_break[static_cast<std::size_t>(cur)]) {
        std::int32_t next = -1;
        for (std::int32_t nb : graph.adjacency[static_cast<std::size_t>(cur)]) {
          if (nb != prev && !used.contains(key(cur, nb))) {
            next = nb;
            break;
          }
        }
        if (next < 0) break;
        used.insert(key(cur, next));
        chain.nodes.push_back(next);
        prev = cur;
        cur = next;
      }
      chain.length_mm = path_length(graph, chain.nodes);
      chains.push_back(std::move(chain));
    }
  }
  return chains;
}

}  // namespace

namespace {

GraphPath component_diameter(const SkeletonGraph& graph, const std::vector<std::int32_t>& component,
                             const PathOptions& options) {
  if (component.size() == 1) return {component, 0.0};

  std::vector<std::int32_t> ends;
  for (std::int32_t v : component) {
    if (graph.degree(v) == 1) ends.push_back(v);
  }
  if (ends.size() < 2) return double_sweep(graph, component);

  // Reduce to a multigraph over non-degree-2 voxels and search simple paths
  // between endpoints exhaustively.
  std::vector<bool> is_break(graph.nodes.size(), false);
  std::vector<std::int32_t> reduced;
  for (std::int32_t v : component) {
    if (graph.degree(v) != 2) {
      is_break[static_cast<std::size_t>(v)] = true;
      reduced.push_back(v);
    }
  }
  const std::vector<Chain> chains = split_chains(graph, component, is_break, {});
  std::vector<std::vector<std::size_t>> incident(graph.nodes.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& nodes = chains[c].nodes;
    if (nodes.front() == nodes.back()) continue;  // loop back to the same node
    incident[static_cast<std::size_t>(nodes.front())].push_back(c);
    incident[static_cast<std::size_t>(nodes.back())].push_back(c);
  }

  std::vector<bool> on_path(graph.nodes.size(), false);
  std::vector<std::size_t> stack_chains, best_chains;
  std::int32_t best_start = -1;
  double best_length = -1.0;
  std::size_t expansions = 0;
  bool exhausted = false;

  std::function<void(std::int32_t, std::int32_t, double)> search = [&](std::int32_t start, std::int32_t at,
                                                                       double length) {
    if (exhausted) return;
    if (++expansions > options.search_budget) {
      exhausted = true;
      return;
    }
    if (at != start && graph.degree(at) == 1 && length > best_length + 1e-9) {
      best_length = length;
      best_chains = stack_chains;
      best_start = start;
    }
    for (std::size_t c : incident[static_cast<std::size_t>(at)]) {
      const auto& nodes = chains[c].nodes;
      const std::int32_t other = nodes.front() == at ? nodes.back() : nodes.front();
      if (on_path[static_cast<std::size_t>(other)]) continue;
      on_path[static_cast<std::size_t>(other)] = true;
      stack_chains.push_back(c);
      search(start, other, length + chains[c].length_mm);
      stack_chains.pop_back();
      on_path[static_cast<std::size_t>(other)] = false;
    }
  };

  for (std::int32_t start : ends) {
    on_path[static_cast<std::size_t>(start)] = true;
    search(start, start, 0.0);
    on_path[static_cast<std::size_t>(start)] = false;
    if (exhausted) break;
  }
  if (best_start < 0) return longest_shortest(graph, ends);

  GraphPath out;
  out.nodes.push_back(best_start);
  std::int32_t at = best_start;
  for (std::size_t c : best_chains) {
    const auto& nodes = chains[c].nodes;
    if (nodes.front() == at) {
      out.nodes.insert(out.nodes.end(), nodes.begin() + 1, nodes.end());
    } else {
      out.nodes.insert(out.nodes.end(), nodes.rbegin() + 1, nodes.rend());
    }
    at = out.nodes.back();
  }
  out.length_mm = path_length(graph, out.nodes);
  if (exhausted) {
    // Partial search: keep whichever of the best path seen so far and the
    // longest shortest path is longer.
    GraphPath fallback = longest_shortest(graph, ends);
    if (fallback.length_mm > out.length_mm) return fallback;
  }
  return out;
}

}  // namespace

GraphPath diameter_path(const SkeletonGraph& graph, std::int32_t seed, const PathOptions& options) {
  for (const auto& component : graph_components(graph)) {
    if (std::binary_search(component.begin(), component.end(), seed)) {
      return component_diameter(graph, component, options);
    }
  }
  throw Error(ErrorKind::invalid_input, "seed node is not part of the skeleton graph");
}

Curve path_to_curve(const SkeletonGraph& graph, const GraphPath& path) {
  Curve curve;
  curve.points.reserve(path.nodes.size());
  for (std::int32_t v : path.nodes) curve.points.push_back(graph.geometry.world(graph.nodes[static_cast<std::size_t>(v)]));
  return curve;
}

std::vector<ExtractedPath> extract_paths(const SkeletonGraph& graph, const PathOptions& options) {
  std::vector<ExtractedPath> out;
  const auto components = graph_components(graph);
  for (std::size_t ci = 0; ci < components.size(); ++ci) {
    const auto& component = components[ci];
    if (component.size() < 2) continue;
    const GraphPath diameter = component_diameter(graph, component, options);
    out.push_back({path_to_curve(graph, diameter), ci, true});

    std::vector<bool> is_break(graph.nodes.size(), false);
    std::set<std::pair<std::int32_t, std::int32_t>> used;
    for (std::int32_t v : component) is_break[static_cast<std::size_t>(v)] = graph.degree(v) != 2;
    for (std::size_t i = 0; i < diameter.nodes.size(); ++i) {
      is_break[static_cast<std::size_t>(diameter.nodes[i])] = true;
      if (i > 0) {
        const std::int32_t a = diameter.nodes[i - 1], b = diameter.nodes[i];
        used.insert({std::min(a, b), std::max(a, b)});
      }
    }
    for (const Chain& chain : split_chains(graph, component, is_break, used)) {
      if (chain.length_mm < options.min_branch_mm) continue;
      out.push_back({path_to_curve(graph, GraphPath{chain.nodes, chain.length_mm}), ci, false});
    }
  }
  return out;
}

}  // namespace canaleval
