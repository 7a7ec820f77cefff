#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "canaleval/error.hpp"
#include "canaleval/geometry.hpp"

namespace canaleval {

struct Index3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
};

/// Placement of a voxel lattice in world space. `origin_mm` is the center of
/// voxel (0, 0, 0); voxel (i, j, k) sits at origin + (i*sx, j*sy, k*sz).
struct GridGeometry {
  std::array<std::int64_t, 3> dims{0, 0, 0};
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
  Point3 origin_mm;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  }
  std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + dims[0] * (y + dims[1] * z));
  }
  std::size_t linear(Index3 i) const { return linear(i.x, i.y, i.z); }
  Index3 index(std::size_t linear_index) const {
    const auto l = static_cast<std::int64_t>(linear_index);
    return {l % dims[0], (l / dims[0]) % dims[1], l / (dims[0] * dims[1])};
  }
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  Point3 world(Index3 i) const {
    return {origin_mm.x + static_cast<double>(i.x) * spacing_mm[0],
            origin_mm.y + static_cast<double>(i.y) * spacing_mm[1],
            origin_mm.z + static_cast<double>(i.z) * spacing_mm[2]};
  }
  Point3 world(std::size_t linear_index) const { return world(index(linear_index)); }
  /// Continuous voxel coordinates of a world point.
  Point3 continuous_index(Point3 p) const {
    return {(p.x - origin_mm.x) / spacing_mm[0], (p.y - origin_mm.y) / spacing_mm[1],
            (p.z - origin_mm.z) / spacing_mm[2]};
  }
  /// Physical extent measured across voxel faces.
  std::array<double, 3> extent_mm() const {
    return {static_cast<double>(dims[0]) * spacing_mm[0], static_cast<double>(dims[1]) * spacing_mm[1],
            static_cast<double>(dims[2]) * spacing_mm[2]};
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Throws invalid_parameter on non-positive dims/spacing or non-finite origin.
void validate(const GridGeometry& geometry);

/// Dense x-fastest voxel array with its world placement.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(GridGeometry geometry, T fill = T{})
      : geometry_(geometry), data_((validate(geometry), geometry.voxel_count()), fill) {}
  Grid(GridGeometry geometry, std::vector<T> data) : geometry_(geometry), data_(std::move(data)) {
    validate(geometry_);
    if (data_.size() != geometry_.voxel_count()) {
      throw Error(ErrorKind::invalid_input, "grid data length does not match dims");
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  const std::array<std::int64_t, 3>& dims() const { return geometry_.dims; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::int64_t x, std::int64_t y, std::int64_t z) { return data_[geometry_.linear(x, y, z)]; }
  const T& at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[geometry_.linear(x, y, z)];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  GridGeometry geometry_;
  std::vector<T> data_;
};

/// Binary mask; values are 0 or 1.
using Mask = Grid<std::uint8_t>;
using LabelGrid = Grid<std::int32_t>;

enum class VolumeKind { probability, intensity };

/// Scalar volume (probability map or image intensities).
struct Volume {
  Grid<float> grid;
  VolumeKind kind = VolumeKind::intensity;

  friend bool operator==(const Volume&, const Volume&) = default;
};

std::size_t count_foreground(const Mask& mask);

/// Trilinear resampling onto an isotropic grid spanning the same physical
/// box. Samples whose stencil leaves the source clamp to the nearest voxel.
Volume resample_linear(const Volume& volume, double target_spacing_mm);

/// Nearest-neighbour variant used for binary masks.
Mask resample_nearest(const Mask& mask, double target_spacing_mm);

/// Geometry of the isotropic resampling target.
GridGeometry isotropic_geometry(const GridGeometry& source, double target_spacing_mm);

struct TubeMask {
  Mask mask;
  /// Set when part of the tube fell outside the grid and was clipped.
  bool clipped = false;
};

/// Foreground iff the voxel center is within diameter/2 of any polyline segment.
TubeMask rasterize_tube(const Curve& curve, const GridGeometry& geometry, double diameter_mm);

/// Adds the tube of `curve` into an existing mask; returns the clipped flag.
bool paint_tube(const Curve& curve, double diameter_mm, Mask& mask);

/// Dice coefficient 2|A n B| / (|A| + |B|). Both empty is an error.
double dice(const Mask& a, const Mask& b);

struct LabelComponents {
  LabelGrid labels;
  std::int32_t count = 0;
  /// Voxel count per label; sizes[0] is unused.
  std::vector<std::size_t> sizes;
};

/// 26-connected labeling. Labels are numbered by ascending minimum linear
/// voxel index of each component.
LabelComponents connected_components(const Mask& mask);

Mask threshold(const Volume& volume, double level);

void require_same_geometry(const GridGeometry& a, const GridGeometry& b, const char* what);

}  // namespace canaleval
