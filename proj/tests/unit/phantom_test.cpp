#include <gtest/gtest.h>

#include <random>

#include "canaleval/error.hpp"
#include "canaleval/metrics.hpp"
#include "canaleval/phantom.hpp"
#include "support/oracles.hpp"

namespace {

using namespace canaleval;

double trimmed_mcd(const Curve& truth, const Curve& rater) {
  const auto t = trim_to_shortest(std::vector<Curve>{truth, rater});
  return mcd(densified(t[1]), densified(t[0]));
}

TEST(Phantom, DeterministicPerSeed) {
  PhantomSpec spec;
  spec.seed = 17;
  const CanalPair a = generate_ground_truth(spec), b = generate_ground_truth(spec);
  EXPECT_EQ(a.left.points, b.left.points);
  EXPECT_EQ(a.right.points, b.right.points);
  EXPECT_EQ(simulate_raters(a, spec), simulate_raters(b, spec));
  EXPECT_TRUE(render_probability_volume(a, spec).grid == render_probability_volume(b, spec).grid);
  spec.seed = 18;
  EXPECT_NE(generate_ground_truth(spec).right.points, a.right.points);
}

TEST(Phantom, ShapeAndMirrorSymmetry) {
  PhantomSpec spec;
  spec.mirror_offset_mm = {0, 0, 0};
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    spec.seed = seed;
    const CanalPair p = generate_ground_truth(spec);
    const double mid = grid_midplane_x(spec.grid);
    EXPECT_EQ(p.left.points, mirror_sagittal(p.right, mid).points);
    EXPECT_EQ(p.left.side, Side::left);
    EXPECT_EQ(p.right.side, Side::right);
    const double len = arc_length(p.right);
    EXPECT_GE(len, spec.min_length_mm - 1e-9);
    EXPECT_LE(len, spec.max_length_mm + 1e-9);
    EXPECT_NEAR(len, draw_shape(spec).length_mm, 1e-9);
    // Anterior first, right canal at smaller x.
    EXPECT_LT(p.right.points.front().y, p.right.points.back().y);
    for (const Point3& q : p.right.points) EXPECT_LT(q.x, mid);
  }
}

TEST(Phantom, NoiselessRatersTraceTheTruth) {
  PhantomSpec spec;
  spec.sigma_mm = 0.0;
  spec.max_truncation_mm = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    spec.seed = seed;
    const CanalPair truth = generate_ground_truth(spec);
    for (const AnnotationDocument& doc : simulate_raters(truth, spec)) {
      ASSERT_EQ(doc.canals.size(), 2u);
      for (const CanalAnnotation& canal : doc.canals) {
        const Curve c = to_curve(canal, doc.rater_id, 0.1);
        const Curve& t = canal.side == Side::left ? truth.left : truth.right;
        EXPECT_LE(smcd(densified(c), densified(t)), 0.05);
      }
    }
  }
}

TEST(Phantom, RaterJitterSetsTheMeanDistance) {
  PhantomSpec spec;
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    spec.seed = seed;
    const CanalPair truth = generate_ground_truth(spec);
    for (const AnnotationDocument& doc : simulate_raters(truth, spec))
      for (const CanalAnnotation& canal : doc.canals) {
        sum += trimmed_mcd(canal.side == Side::left ? truth.left : truth.right, to_curve(canal, doc.rater_id, 0.1));
        ++n;
      }
  }
  EXPECT_EQ(n, 80);
  const double mean = sum / n;
  EXPECT_GE(mean, 0.15);
  EXPECT_LE(mean, 0.45);
}

TEST(Phantom, ProbabilityProfile) {
  PhantomSpec spec;
  EXPECT_EQ(tube_probability(0.0, spec), kAxisProbability);
  EXPECT_EQ(tube_probability(1.5, spec), 0.5);
  EXPECT_NEAR(tube_probability(1.5 + 1e-9, spec), 0.49, 1e-6);
  EXPECT_NEAR(tube_probability(20.0, spec), kBackgroundProbability, 1e-12);
  double prev = 1.0;
  for (double d = 0.0; d < 6.0; d += 0.05) {
    const double p = tube_probability(d, spec);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(Phantom, VolumeMatchesBruteForceDistances) {
  PhantomSpec spec;
  spec.seed = 4;
  spec.blob_count = 0;
  const CanalPair truth = generate_ground_truth(spec);
  const Volume v = render_probability_volume(truth, spec);
  EXPECT_EQ(v.kind, VolumeKind::probability);
  const GridGeometry& g = v.grid.geometry();
  const double reach = 0.5 * spec.tube_diameter_mm + 4.0 * spec.falloff_mm;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, v.grid.size() - 1);
  auto check = [&](std::size_t i) {
    const Point3 w = g.world(i);
    double d = 1e300;
    for (const Curve* c : {&truth.left, &truth.right})
      for (std::size_t s = 1; s < c->points.size(); ++s)
        d = std::min(d, point_segment_distance(w, c->points[s - 1], c->points[s]));
    const double want = d <= reach ? tube_probability(d, spec) : kBackgroundProbability;
    EXPECT_NEAR(v.grid[i], want, 1e-6) << i;
  };
  for (int k = 0; k < 3000; ++k) check(pick(rng));
  // Voxels near the axis, where the interesting values live.
  for (std::size_t k = 0; k < truth.right.points.size(); k += 25) {
    const Point3 ci = g.continuous_index(truth.right.points[k]);
    check(g.linear(std::llround(ci.x), std::llround(ci.y), std::llround(ci.z)));
  }
  for (float x : v.grid.data()) {
    ASSERT_GE(x, static_cast<float>(kBackgroundProbability));
    ASSERT_LE(x, static_cast<float>(kAxisProbability));
  }
}

TEST(Phantom, BlobsAddComponentsOnlyWhenPresent) {
  PhantomSpec spec;
  spec.seed = 6;
  spec.blob_count = 0;
  const CanalPair truth = generate_ground_truth(spec);
  EXPECT_EQ(connected_components(threshold(render_probability_volume(truth, spec), 0.5)).count, 2);
  spec.blob_count = 4;
  const auto noisy = connected_components(threshold(render_probability_volume(truth, spec), 0.5));
  EXPECT_GT(noisy.count, 2);
  EXPECT_LE(noisy.count, 6);
}

TEST(Phantom, InvalidSpecsAreRejected) {
  PhantomSpec spec;
  spec.min_length_mm = 90.0;
  spec.max_length_mm = 80.0;
  EXPECT_THROW(generate_ground_truth(spec), Error);
  spec = PhantomSpec{};
  spec.sigma_mm = -1.0;
  EXPECT_THROW(validate(spec), Error);
  spec = PhantomSpec{};
  spec.grid.dims = {40, 40, 40};
  try {
    generate_ground_truth(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::spec_error);
  }
}

}  // namespace
