#include "canaleval/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "canaleval/error.hpp"
#include "canaleval/random.hpp"

namespace canaleval {

namespace {

constexpr std::uint32_t kTruthStream = 0;
constexpr std::uint32_t kRaterStreamBase = 1000;
constexpr std::uint32_t kBlobStreamBase = 2000;
constexpr double kTruthStep = 0.1;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::spec_error, "phantom spec: " + what);
}

bool inside_grid(Point3 p, const GridGeometry& g, double clearance) {
  const std::array<double, 3> v{p.x, p.y, p.z};
  const std::array<double, 3> o{g.origin_mm.x, g.origin_mm.y, g.origin_mm.z};
  for (int a = 0; a < 3; ++a) {
    const double lo = o[a] - 0.5 * g.spacing_mm[a];
    const double hi = o[a] + (static_cast<double>(g.dims[a]) - 0.5) * g.spacing_mm[a];
    if (v[a] - clearance < lo || v[a] + clearance > hi) return false;
  }
  return true;
}

// Inclusive voxel index range covering world interval [lo, hi] on axis a.
std::pair<std::int64_t, std::int64_t> index_range(const GridGeometry& g, int a, double lo, double hi) {
  const double o = a == 0 ? g.origin_mm.x : a == 1 ? g.origin_mm.y : g.origin_mm.z;
  const double s = g.spacing_mm[static_cast<std::size_t>(a)];
  const auto first = static_cast<std::int64_t>(std::ceil((lo - o) / s));
  const auto last = static_cast<std::int64_t>(std::floor((hi - o) / s));
  return {std::max<std::int64_t>(first, 0), std::min<std::int64_t>(last, g.dims[static_cast<std::size_t>(a)] - 1)};
}

}  // namespace

GridGeometry PhantomSpec::default_grid() {
  GridGeometry g;
  g.dims = {130, 220, 90};
  g.spacing_mm = {0.4, 0.4, 0.4};
  g.origin_mm = {0.0, 0.0, 0.0};
  return g;
}

void validate(const PhantomSpec& spec) {
  validate(spec.grid);
  require(spec.min_length_mm > 0.0 && spec.min_length_mm <= spec.max_length_mm, "length range");
  require(spec.min_radius_mm > 0.0 && spec.min_radius_mm <= spec.max_radius_mm, "curvature radius range");
  require(is_finite(spec.mirror_offset_mm), "mirror offset");
  require(spec.raters >= 0, "rater count");
  require(spec.sigma_mm >= 0.0 && std::isfinite(spec.sigma_mm), "rater sigma");
  require(spec.control_spacing_mm > 0.0, "control point spacing");
  require(spec.max_truncation_mm >= 0.0 && spec.max_truncation_mm < spec.min_length_mm, "truncation");
  require(spec.blob_count >= 0, "blob count");
  require(spec.blob_min_mm > 0.0 && spec.blob_min_mm <= spec.blob_max_mm, "blob size range");
  require(spec.tube_diameter_mm > 0.0, "tube diameter");
  require(spec.falloff_mm > 0.0, "falloff width");
}

std::string phantom_scan_id(std::uint64_t seed) { return "phantom-" + std::to_string(seed); }

std::string phantom_rater_id(int rater) { return "expert" + std::to_string(rater + 1); }

PhantomShape draw_shape(const PhantomSpec& spec) {
  RandomStream rng(spec.seed, kTruthStream);
  PhantomShape shape;
  shape.length_mm = rng.uniform(spec.min_length_mm, spec.max_length_mm);
  shape.radius_mm = rng.uniform(spec.min_radius_mm, spec.max_radius_mm);
  shape.turn_rad = std::min(std::numbers::pi / 3.0, 0.6 * shape.length_mm / shape.radius_mm);
  return shape;
}

CanalPair generate_ground_truth(const PhantomSpec& spec) {
  validate(spec);
  const PhantomShape shape = draw_shape(spec);
  const double mid = grid_midplane_x(spec.grid);
  const double length = shape.length_mm;
  const double straight = length - shape.radius_mm * shape.turn_rad;

  // Straight anterior course, then an upward circular arc into the ramus.
  std::vector<Point3> base;
  const auto steps = static_cast<std::size_t>(std::ceil(length / kTruthStep));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double s = std::min(length, static_cast<double>(i) * kTruthStep);
    const double t = s / length;
    double y = s, z = 0.0;
    if (s > straight) {
      const double a = (s - straight) / shape.radius_mm;
      y = straight + shape.radius_mm * std::sin(a);
      z = shape.radius_mm * (1.0 - std::cos(a));
    }
    const double lateral =
        spec.anterior_half_separation_mm + spec.divergence_mm * t + spec.bow_mm * std::sin(std::numbers::pi * t);
    base.push_back({mid - lateral, spec.grid.origin_mm.y + spec.anterior_y_mm + y,
                    spec.grid.origin_mm.z + spec.anterior_z_mm + z});
  }

  CanalPair pair;
  pair.right = truncate_to_length(Curve{std::move(base), Side::right, "truth"}, length);
  pair.left = mirror_sagittal(pair.right, mid);
  for (Point3& p : pair.left.points) p = p + spec.mirror_offset_mm;
  pair.left.side = Side::left;
  pair.left.source = "truth";

  const double clearance = 0.5 * spec.tube_diameter_mm + spec.grid.spacing_mm[0];
  for (const Curve* c : {&pair.left, &pair.right}) {
    for (Point3 p : c->points) {
      require(inside_grid(p, spec.grid, clearance), "canal of length " + std::to_string(length) +
                                                         " mm does not fit inside the grid");
    }
  }
  return pair;
}

std::vector<AnnotationDocument> simulate_raters(const CanalPair& truth, const PhantomSpec& spec) {
  validate(spec);
  std::vector<AnnotationDocument> docs;
  for (int r = 0; r < spec.raters; ++r) {
    RandomStream rng(spec.seed, kRaterStreamBase + static_cast<std::uint32_t>(r));
    AnnotationDocument doc;
    doc.scan_id = phantom_scan_id(spec.seed);
    doc.rater_id = phantom_rater_id(r);
    doc.device = kPhantomDevice;
    for (const Curve* c : {&truth.left, &truth.right}) {
      const double full = arc_length(*c);
      const double cut = spec.max_truncation_mm > 0.0 ? rng.uniform(0.0, spec.max_truncation_mm) : 0.0;
      const double length = full - cut;
      const int n = std::max(2, static_cast<int>(std::ceil(length / spec.control_spacing_mm)) + 1);
      CanalAnnotation canal;
      canal.side = c->side;
      canal.kind = PointKind::control_points;
      for (int i = 0; i < n; ++i) {
        const Point3 p = point_at_length(c->points, length * static_cast<double>(i) / (n - 1));
        const double dx = rng.normal(0.0, spec.sigma_mm);
        const double dy = rng.normal(0.0, spec.sigma_mm);
        const double dz = rng.normal(0.0, spec.sigma_mm);
        canal.points_mm.push_back({p.x + dx, p.y + dy, p.z + dz});
      }
      doc.canals.push_back(std::move(canal));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

double tube_probability(double d_mm, const PhantomSpec& spec) {
  const double r = 0.5 * spec.tube_diameter_mm;
  if (d_mm <= r) {
    const double q = d_mm / r;
    return 0.5 + (kAxisProbability - 0.5) * (1.0 - q * q);
  }
  const double u = (d_mm - r) / spec.falloff_mm;
  return kBackgroundProbability + (0.49 - kBackgroundProbability) * std::exp(-u * u);
}

Volume render_probability_volume(const CanalPair& truth, const PhantomSpec& spec) {
  validate(spec);
  const GridGeometry& g = spec.grid;
  const double r = 0.5 * spec.tube_diameter_mm;
  const double reach = r + 4.0 * spec.falloff_mm;

  std::vector<double> dist(g.voxel_count(), std::numeric_limits<double>::infinity());
  for (const Curve* c : {&truth.left, &truth.right}) {
    for (std::size_t k = 0; k + 1 < c->points.size(); ++k) {
      const Point3 a = c->points[k], b = c->points[k + 1];
      const auto [x0, x1] = index_range(g, 0, std::min(a.x, b.x) - reach, std::max(a.x, b.x) + reach);
      const auto [y0, y1] = index_range(g, 1, std::min(a.y, b.y) - reach, std::max(a.y, b.y) + reach);
      const auto [z0, z1] = index_range(g, 2, std::min(a.z, b.z) - reach, std::max(a.z, b.z) + reach);
      for (std::int64_t z = z0; z <= z1; ++z) {
        for (std::int64_t y = y0; y <= y1; ++y) {
          for (std::int64_t x = x0; x <= x1; ++x) {
            const std::size_t i = g.linear(x, y, z);
            dist[i] = std::min(dist[i], point_segment_distance(g.world(Index3{x, y, z}), a, b));
          }
        }
      }
    }
  }

  Volume out{Grid<float>(g, static_cast<float>(kBackgroundProbability)), VolumeKind::probability};
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= reach) out.grid[i] = static_cast<float>(tube_probability(dist[i], spec));
  }

  std::vector<Point3> axis = truth.left.points;
  axis.insert(axis.end(), truth.right.points.begin(), truth.right.points.end());
  for (int b = 0; b < spec.blob_count; ++b) {
    RandomStream rng(spec.seed, kBlobStreamBase + static_cast<std::uint32_t>(b));
    const Point3 semi{rng.uniform(spec.blob_min_mm, spec.blob_max_mm), rng.uniform(spec.blob_min_mm, spec.blob_max_mm),
                      rng.uniform(spec.blob_min_mm, spec.blob_max_mm)};
    const double largest = std::max({semi.x, semi.y, semi.z});
    const auto extent = g.extent_mm();
    std::optional<Point3> center;
    for (int attempt = 0; attempt < 64 && !center; ++attempt) {
      const Point3 lo = g.origin_mm + Point3{largest, largest, largest};
      const Point3 c{rng.uniform(lo.x, lo.x + std::max(0.0, extent[0] - 2.0 * largest - g.spacing_mm[0])),
                     rng.uniform(lo.y, lo.y + std::max(0.0, extent[1] - 2.0 * largest - g.spacing_mm[1])),
                     rng.uniform(lo.z, lo.z + std::max(0.0, extent[2] - 2.0 * largest - g.spacing_mm[2]))};
      double nearest = std::numeric_limits<double>::infinity();
      for (Point3 p : axis) nearest = std::min(nearest, distance(p, c));
      if (nearest >= r + largest + spec.blob_clearance_mm) center = c;
    }
    if (!center) continue;  // grid too crowded; the blob is skipped deterministically
    const auto [x0, x1] = index_range(g, 0, center->x - semi.x, center->x + semi.x);
    const auto [y0, y1] = index_range(g, 1, center->y - semi.y, center->y + semi.y);
    const auto [z0, z1] = index_range(g, 2, center->z - semi.z, center->z + semi.z);
    for (std::int64_t z = z0; z <= z1; ++z) {
      for (std::int64_t y = y0; y <= y1; ++y) {
        for (std::int64_t x = x0; x <= x1; ++x) {
          const Point3 d = g.world(Index3{x, y, z}) - *center;
          const double q2 = (d.x / semi.x) * (d.x / semi.x) + (d.y / semi.y) * (d.y / semi.y) +
                            (d.z / semi.z) * (d.z / semi.z);
          if (q2 >= 1.0) continue;
          const auto v = static_cast<float>(kBackgroundProbability +
                                            (kBlobPeakProbability - kBackgroundProbability) * (1.0 - q2));
          float& cell = out.grid.at(x, y, z);
          cell = std::max(cell, v);
        }
      }
    }
  }
  return out;
}

}  // namespace canaleval
