#include "canaleval/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace canaleval {

void validate(const GridGeometry& geometry) {
  for (int a = 0; a < 3; ++a) {
    if (geometry.dims[a] <= 0) throw Error(ErrorKind::invalid_parameter, "grid dims must be positive");
    if (!(geometry.spacing_mm[a] > 0.0) || !std::isfinite(geometry.spacing_mm[a])) {
      throw Error(ErrorKind::invalid_parameter, "grid spacing must be positive");
    }
  }
  if (!is_finite(geometry.origin_mm)) throw Error(ErrorKind::invalid_parameter, "grid origin must be finite");
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::geometry_mismatch, std::string(what) + ": grids differ in dims, spacing or origin");
  }
}

std::size_t count_foreground(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

GridGeometry isotropic_geometry(const GridGeometry& source, double target_spacing_mm) {
  if (!(target_spacing_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "target spacing must be positive");
  validate(source);
  GridGeometry out;
  const auto extent = source.extent_mm();
  for (int a = 0; a < 3; ++a) {
    out.dims[a] = std::max<std::int64_t>(1, std::llround(extent[a] / target_spacing_mm));
    out.spacing_mm[a] = target_spacing_mm;
  }
  // Same lower physical face as the source.
  out.origin_mm = {source.origin_mm.x - 0.5 * source.spacing_mm[0] + 0.5 * target_spacing_mm,
                   source.origin_mm.y - 0.5 * source.spacing_mm[1] + 0.5 * target_spacing_mm,
                   source.origin_mm.z - 0.5 * source.spacing_mm[2] + 0.5 * target_spacing_mm};
  return out;
}

Volume resample_linear(const Volume& volume, double target_spacing_mm) {
  const GridGeometry& src = volume.grid.geometry();
  const GridGeometry dst = isotropic_geometry(src, target_spacing_mm);
  Grid<float> out(dst);

  struct Stencil {
    std::int64_t lo, hi;
    double w;  // weight of hi
  };
  auto stencils = [&](int axis) {
    const std::int64_t n = src.dims[axis];
    std::vector<Stencil> s(static_cast<std::size_t>(dst.dims[axis]));
    const double src_origin = axis == 0 ? src.origin_mm.x : axis == 1 ? src.origin_mm.y : src.origin_mm.z;
    const double dst_origin = axis == 0 ? dst.origin_mm.x : axis == 1 ? dst.origin_mm.y : dst.origin_mm.z;
    for (std::int64_t i = 0; i < dst.dims[axis]; ++i) {
      const double world = dst_origin + static_cast<double>(i) * dst.spacing_mm[axis];
      double c = (world - src_origin) / src.spacing_mm[axis];
      c = std::clamp(c, 0.0, static_cast<double>(n - 1));
      auto lo = static_cast<std::int64_t>(std::floor(c));
      lo = std::min(lo, n - 1);
      const std::int64_t hi = std::min(lo + 1, n - 1);
      s[static_cast<std::size_t>(i)] = {lo, hi, c - static_cast<double>(lo)};
    }
    return s;
  };
  const auto sx = stencils(0), sy = stencils(1), sz = stencils(2);
  const auto& in = volume.grid;

  for (std::int64_t k = 0; k < dst.dims[2]; ++k) {
    const Stencil& z = sz[static_cast<std::size_t>(k)];
    for (std::int64_t j = 0; j < dst.dims[1]; ++j) {
      const Stencil& y = sy[static_cast<std::size_t>(j)];
      for (std::int64_t i = 0; i < dst.dims[0]; ++i) {
        const Stencil& x = sx[static_cast<std::size_t>(i)];
        auto v = [&](std::int64_t a, std::int64_t b, std::int64_t c) {
          return static_cast<double>(in.at(a, b, c));
        };
        const double c00 = v(x.lo, y.lo, z.lo) * (1 - x.w) + v(x.hi, y.lo, z.lo) * x.w;
        const double c10 = v(x.lo, y.hi, z.lo) * (1 - x.w) + v(x.hi, y.hi, z.lo) * x.w;
        const double c01 = v(x.lo, y.lo, z.hi) * (1 - x.w) + v(x.hi, y.lo, z.hi) * x.w;
        const double c11 = v(x.lo, y.hi, z.hi) * (1 - x.w) + v(x.hi, y.hi, z.hi) * x.w;
        const double c0 = c00 * (1 - y.w) + c10 * y.w;
        const double c1 = c01 * (1 - y.w) + c11 * y.w;
        out.at(i, j, k) = static_cast<float>(c0 * (1 - z.w) + c1 * z.w);
      }
    }
  }
  return {std::move(out), volume.kind};
}

Mask resample_nearest(const Mask& mask, double target_spacing_mm) {
  const GridGeometry& src = mask.geometry();
  const GridGeometry dst = isotropic_geometry(src, target_spacing_mm);
  Mask out(dst);
  for (std::int64_t k = 0; k < dst.dims[2]; ++k) {
    for (std::int64_t j = 0; j < dst.dims[1]; ++j) {
      for (std::int64_t i = 0; i < dst.dims[0]; ++i) {
        const Point3 c = src.continuous_index(dst.world(Index3{i, j, k}));
        auto pick = [](double v, std::int64_t n) {
          return std::clamp<std::int64_t>(std::llround(v), 0, n - 1);
        };
        out.at(i, j, k) = mask.at(pick(c.x, src.dims[0]), pick(c.y, src.dims[1]), pick(c.z, src.dims[2]));
      }
    }
  }
  return out;
}

bool paint_tube(const Curve& curve, double diameter_mm, Mask& mask) {
  if (!(diameter_mm > 0.0)) throw Error(ErrorKind::invalid_parameter, "tube diameter must be positive");
  validate(curve);
  const GridGeometry& g = mask.geometry();
  const double r = 0.5 * diameter_mm;
  bool clipped = false;

  for (std::size_t s = 1; s < curve.points.size(); ++s) {
    const Point3 a = curve.points[s - 1], b = curve.points[s];
    const Point3 ca = g.continuous_index(a), cb = g.continuous_index(b);
    std::array<std::int64_t, 3> lo{}, hi{};
    const std::array<double, 3> amin{std::min(ca.x, cb.x), std::min(ca.y, cb.y), std::min(ca.z, cb.z)};
    const std::array<double, 3> amax{std::max(ca.x, cb.x), std::max(ca.y, cb.y), std::max(ca.z, cb.z)};
    for (int ax = 0; ax < 3; ++ax) {
      lo[ax] = static_cast<std::int64_t>(std::floor(amin[ax] - r / g.spacing_mm[ax]));
      hi[ax] = static_cast<std::int64_t>(std::ceil(amax[ax] + r / g.spacing_mm[ax]));
    }
    for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
      for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
        for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
          const bool inside = g.contains(x, y, z);
          if (inside && mask.at(x, y, z) != 0) continue;
          if (!inside && clipped) continue;
          if (point_segment_distance(g.world(Index3{x, y, z}), a, b) <= r) {
            if (inside) {
              mask.at(x, y, z) = 1;
            } else {
              clipped = true;
            }
          }
        }
      }
    }
  }
  return clipped;
}

TubeMask rasterize_tube(const Curve& curve, const GridGeometry& geometry, double diameter_mm) {
  TubeMask out{Mask(geometry), false};
  out.clipped = paint_tube(curve, diameter_mm, out.mask);
  return out;
}

double dice(const Mask& a, const Mask& b) {
  require_same_geometry(a.geometry(), b.geometry(), "dice");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool fa = a[i] != 0, fb = b[i] != 0;
    na += fa;
    nb += fb;
    both += fa && fb;
  }
  if (na + nb == 0) throw Error(ErrorKind::undefined_metric, "dice undefined for two empty masks");
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

namespace {

struct DisjointSet {
  std::vector<std::int32_t> parent;

  std::int32_t make() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    return parent.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller provisional label wins so roots follow scan order.
    if (a < b) {
      parent[static_cast<std::size_t>(b)] = a;
    } else {
      parent[static_cast<std::size_t>(a)] = b;
    }
  }
};

}  // namespace

LabelComponents connected_components(const Mask& mask) {
  const GridGeometry& g = mask.geometry();
  LabelGrid provisional(g, 0);
  DisjointSet sets;
  sets.make();  // slot 0 = background

  const auto [nx, ny, nz] = g.dims;
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        if (mask.at(x, y, z) == 0) continue;
        std::int32_t label = 0;
        // The 13 neighbours that precede (x, y, z) in scan order.
        for (int dz = -1; dz <= 0; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
              const std::int64_t X = x + dx, Y = y + dy, Z = z + dz;
              if (!g.contains(X, Y, Z)) continue;
              const std::int32_t other = provisional.at(X, Y, Z);
              if (other == 0) continue;
              if (label == 0) {
                label = other;
              } else {
                sets.unite(label, other);
              }
            }
          }
        }
        provisional.at(x, y, z) = label == 0 ? sets.make() : label;
      }
    }
  }

  LabelComponents out{LabelGrid(g, 0), 0, {0}};
  std::vector<std::int32_t> final_label(sets.parent.size(), 0);
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    const std::int32_t p = provisional[i];
    if (p == 0) continue;
    const std::int32_t root = sets.find(p);
    auto& f = final_label[static_cast<std::size_t>(root)];
    if (f == 0) {
      f = ++out.count;
      out.sizes.push_back(0);
    }
    out.labels[i] = f;
    ++out.sizes[static_cast<std::size_t>(f)];
  }
  return out;
}

Mask threshold(const Volume& volume, double level) {
  Mask out(volume.grid.geometry());
  const auto in = volume.grid.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]) >= level ? 1 : 0;
  return out;
}

}  // namespace canaleval
