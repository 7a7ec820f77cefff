#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "canaleval/metrics.hpp"
#include "canaleval/skeleton.hpp"
#include "support/oracles.hpp"

namespace {

using namespace canaleval;
using thinning::Neighborhood;

Neighborhood random_neighborhood(std::mt19937_64& rng, double density) {
  std::bernoulli_distribution coin(density);
  Neighborhood n{};
  for (auto& v : n) v = coin(rng) ? 1 : 0;
  n[13] = 1;
  return n;
}

Neighborhood neighborhood_of(const Mask& m, std::int64_t x, std::int64_t y, std::int64_t z) {
  Neighborhood n{};
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const bool in = m.geometry().contains(x + dx, y + dy, z + dz);
        n[static_cast<std::size_t>((dz + 1) * 9 + (dy + 1) * 3 + dx + 1)] =
            in && m.at(x + dx, y + dy, z + dz) ? 1 : 0;
      }
  return n;
}

GridGeometry unit_cube(std::int64_t n) {
  GridGeometry g;
  g.dims = {n, n, n};
  return g;
}

TEST(Neighborhood, EulerInvarianceMatchesCubicalComplex) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 40000; ++trial) {
    Neighborhood n = random_neighborhood(rng, 0.1 + 0.8 * (trial % 9) / 8.0);
    Neighborhood without = n;
    without[13] = 0;
    const bool invariant = oracle::cubical_euler(n) == oracle::cubical_euler(without);
    ASSERT_EQ(thinning::is_euler_invariant(n), invariant) << trial;
  }
}

TEST(Neighborhood, SingleComponentMatchesOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40000; ++trial) {
    const Neighborhood n = random_neighborhood(rng, 0.05 + 0.6 * (trial % 7) / 6.0);
    std::vector<std::array<int, 3>> pts;
    for (int z = -1; z <= 1; ++z)
      for (int y = -1; y <= 1; ++y)
        for (int x = -1; x <= 1; ++x)
          if ((x || y || z) && oracle::nb(n, x, y, z)) pts.push_back({x, y, z});
    // Count 26-components with a tiny union-find.
    std::vector<std::size_t> parent(pts.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
      return parent[a] == a ? a : parent[a] = find(parent[a]);
    };
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        if (std::abs(pts[a][0] - pts[b][0]) <= 1 && std::abs(pts[a][1] - pts[b][1]) <= 1 &&
            std::abs(pts[a][2] - pts[b][2]) <= 1)
          parent[find(a)] = find(b);
    std::size_t roots = 0;
    for (std::size_t a = 0; a < pts.size(); ++a) roots += find(a) == a;
    ASSERT_EQ(thinning::has_single_object_component(n), roots == 1) << trial;
  }
}

TEST(Neighborhood, DeletableMatchesSimplePointCharacterization) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40000; ++trial) {
    const Neighborhood n = random_neighborhood(rng, 0.05 + 0.9 * (trial % 11) / 10.0);
    int neighbours = 0;
    for (std::size_t i = 0; i < 27; ++i) neighbours += (i != 13 && n[i]);
    const bool expected = neighbours != 1 && oracle::is_simple(n);
    ASSERT_EQ(thinning::is_deletable(n), expected) << trial;
  }
}

TEST(Thin, EmptyAndSingleVoxel) {
  Mask m(unit_cube(5), 0);
  EXPECT_EQ(thin(m), m);
  m.at(2, 2, 2) = 1;
  EXPECT_EQ(thin(m), m);
}

TEST(Thin, TopologyAndIdempotenceOnRandomBlobs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const Mask m = oracle::random_blobs(rng);
    const Mask t = thin(m);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (t[i]) {
        ASSERT_EQ(m[i], 1);
      }
    ASSERT_EQ(oracle::flood_fill(t).size(), oracle::flood_fill(m).size());
    ASSERT_EQ(oracle::background_components6(t), oracle::background_components6(m));
    ASSERT_EQ(thin(t), t);
    // Nothing left on the border is deletable.
    const auto& g = t.geometry();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i]) continue;
      const auto p = g.index(i);
      const Neighborhood n = neighborhood_of(t, p.x, p.y, p.z);
      const bool border = !n[4] || !n[22] || !n[10] || !n[16] || !n[12] || !n[14];
      if (border) {
        ASSERT_FALSE(thinning::is_deletable(n)) << trial << " voxel " << i;
      }
    }
  }
}

TEST(Thin, StraightTubeBecomesOnePathNearTheAxis) {
  GridGeometry g;
  g.dims = {60, 25, 25};
  g.spacing_mm = {0.4, 0.4, 0.4};
  const Curve axis = oracle::polyline({{2.0, 4.8, 4.8}, {21.6, 4.8, 4.8}});
  const Mask tube = rasterize_tube(axis, g, 3.0).mask;
  const Mask skel = thin(tube);
  const SkeletonGraph graph = build_graph(skel);
  ASSERT_EQ(graph_components(graph).size(), 1u);
  EXPECT_EQ(graph.endpoints.size(), 2u);
  EXPECT_TRUE(graph.junctions.empty());
  const auto paths = extract_paths(graph);
  ASSERT_FALSE(paths.empty());
  EXPECT_LE(smcd(densified(paths.front().curve), densified(axis)), 0.6);
}

Mask draw_voxels(const std::vector<Index3>& voxels, std::int64_t n = 20) {
  Mask m(unit_cube(n), 0);
  for (const Index3& v : voxels) m.at(v.x, v.y, v.z) = 1;
  return m;
}

TEST(Graph, StraightLine) {
  std::vector<Index3> v;
  for (int i = 0; i < 10; ++i) v.push_back({i + 2, 5, 5});
  const SkeletonGraph g = build_graph(draw_voxels(v));
  EXPECT_EQ(g.nodes.size(), 10u);
  EXPECT_EQ(g.edges.size(), 9u);
  EXPECT_EQ(g.endpoints.size(), 2u);
  EXPECT_TRUE(g.junctions.empty());
  const auto paths = extract_paths(g);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].curve.points.size(), 10u);
}

TEST(Graph, Empty) {
  const SkeletonGraph g = build_graph(Mask(unit_cube(4), 0));
  EXPECT_TRUE(g.nodes.empty());
  EXPECT_TRUE(g.edges.empty());
  EXPECT_TRUE(extract_paths(g).empty());
}

TEST(Graph, YShape) {
  // Junction at (10,10,10) with three 5-voxel arms that touch only through it:
  // one along +x and two diagonals in the -x half plane.
  std::vector<Index3> v{{10, 10, 10}};
  for (int i = 1; i <= 5; ++i) {
    v.push_back({10 + i, 10, 10});
    v.push_back({10 - i, 10 + i, 10});
    v.push_back({10 - i, 10 - i, 10});
  }
  const SkeletonGraph g = build_graph(draw_voxels(v));
  EXPECT_EQ(g.nodes.size(), 16u);
  EXPECT_EQ(g.edges.size(), 15u);
  EXPECT_EQ(g.endpoints.size(), 3u);
  EXPECT_EQ(g.junctions.size(), 1u);
  std::size_t degree_sum = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) degree_sum += g.degree(static_cast<std::int32_t>(i));
  EXPECT_EQ(degree_sum, 2 * g.edges.size());

  // Endpoint pairs: diagonal-diagonal 10*sqrt(2), diagonal-x 5*sqrt(2) + 5.
  const auto paths = extract_paths(g);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_TRUE(paths[0].is_diameter);
  EXPECT_NEAR(arc_length(paths[0].curve), 10.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(arc_length(paths[1].curve), 5.0, 1e-12);
  EXPECT_EQ(paths[1].curve.points.size(), 6u);
}

TEST(Graph, TwoComponentsGiveTwoPaths) {
  std::vector<Index3> v;
  for (int i = 0; i < 6; ++i) v.push_back({i + 1, 2, 2});
  for (int i = 0; i < 6; ++i) v.push_back({i + 1, 12, 12});
  v.push_back({15, 15, 15});
  const auto paths = extract_paths(build_graph(draw_voxels(v)));
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_NE(paths[0].component, paths[1].component);
}

struct BruteDiameter {
  double length = 0.0;
  std::size_t calls = 0;
};

// Longest simple path between two endpoints by exhaustive DFS over voxels.
BruteDiameter brute_force_diameter(const SkeletonGraph& g, const std::vector<std::int32_t>& component) {
  std::vector<Point3> pos(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) pos[i] = g.geometry.world(g.nodes[i]);
  std::vector<bool> on(g.nodes.size(), false);
  double best = 0.0;
  std::size_t calls = 0;
  std::function<void(std::int32_t, double, std::int32_t)> dfs = [&](std::int32_t v, double len, std::int32_t start) {
    ++calls;
    if (v != start && g.degree(v) == 1) best = std::max(best, len);
    for (std::int32_t w : g.adjacency[static_cast<std::size_t>(v)]) {
      if (on[static_cast<std::size_t>(w)]) continue;
      on[static_cast<std::size_t>(w)] = true;
      dfs(w, len + distance(pos[static_cast<std::size_t>(v)], pos[static_cast<std::size_t>(w)]), start);
      on[static_cast<std::size_t>(w)] = false;
    }
  };
  for (std::int32_t s : component) {
    if (g.degree(s) != 1) continue;
    on[static_cast<std::size_t>(s)] = true;
    dfs(s, 0.0, s);
    on[static_cast<std::size_t>(s)] = false;
  }
  return {best, calls};
}

TEST(Graph, DiameterIsAtLeastEveryEndpointPath) {
  std::mt19937_64 rng(6);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const SkeletonGraph g = build_graph(thin(oracle::random_blobs(rng)));
    for (const auto& comp : graph_components(g)) {
      std::size_t ends = 0;
      for (std::int32_t v : comp) ends += g.degree(v) == 1;
      if (ends < 2 || ends > 12 || comp.size() > 120) continue;
      const PathOptions options;
      const GraphPath d = diameter_path(g, comp.front(), options);
      const BruteDiameter brute = brute_force_diameter(g, comp);
      // The search over chains between junctions makes no more calls than the
      // voxel-level enumeration, so within the budget it must be exact.
      if (brute.calls <= options.search_budget) {
        EXPECT_NEAR(d.length_mm, brute.length, 1e-9);
      } else {
        PathOptions unlimited;
        unlimited.search_budget = brute.calls;
        EXPECT_NEAR(diameter_path(g, comp.front(), unlimited).length_mm, brute.length, 1e-9);
        EXPECT_LE(d.length_mm, brute.length + 1e-9);
      }
      // The path is a simple walk over adjacent nodes.
      for (std::size_t i = 1; i < d.nodes.size(); ++i) {
        const auto& adj = g.adjacency[static_cast<std::size_t>(d.nodes[i - 1])];
        EXPECT_TRUE(std::binary_search(adj.begin(), adj.end(), d.nodes[i]));
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Graph, PathPointsAreSkeletonVoxelCenters) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Mask skel = thin(oracle::random_blobs(rng));
    const SkeletonGraph g = build_graph(skel);
    for (const auto& p : extract_paths(g)) {
      for (const Point3& q : p.curve.points) {
        const Point3 c = g.geometry.continuous_index(q);
        const auto x = std::llround(c.x), y = std::llround(c.y), z = std::llround(c.z);
        ASSERT_EQ(g.geometry.world(Index3{x, y, z}), q);
        ASSERT_EQ(skel.at(x, y, z), 1);
      }
    }
  }
}

}  // namespace
