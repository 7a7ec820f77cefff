#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "canaleval/annotation.hpp"
#include "canaleval/geometry.hpp"
#include "canaleval/skeleton.hpp"
#include "canaleval/volume.hpp"

namespace canaleval {

/// Per-voxel label vote over k rater masks.
struct VoteResult {
  /// canal where canal votes >= background votes, i.e. votes >= ceil(k / 2).
  Mask consensus;
  Grid<std::uint16_t> votes;
  std::size_t raters = 0;
  /// Voxels with an exact canal/background split (resolved to canal).
  std::size_t ties = 0;
};

/// Majority vote with undecided voxels assigned to the canal label.
VoteResult label_vote(std::span<const Mask> masks);

/// Whether `canal_votes` out of `raters` yields a canal label.
constexpr bool vote_is_canal(std::size_t canal_votes, std::size_t raters) {
  return 2 * canal_votes >= raters;
}

inline constexpr double kConsensusVertexSpacing = 2.0;

struct ConsensusCurves {
  /// At most one curve per side, anterior-first.
  std::vector<Curve> curves;
  std::vector<std::string> warnings;
  /// Skeleton components beyond the two largest.
  std::size_t dropped_components = 0;
};

/// Thins the consensus mask, keeps the two largest 26-connected skeleton
/// components and emits the diameter path of each. Sides follow mean x
/// relative to `midplane_x_mm` (larger x is patient left). The path is
/// decimated to skeleton voxels about `vertex_spacing_mm` apart, which removes
/// most of the voxel staircase from its arc length.
ConsensusCurves consensus_curves(const VoteResult& vote, double midplane_x_mm, const PathOptions& options = {},
                                 double vertex_spacing_mm = kConsensusVertexSpacing);

/// Rasterizes every rater's curves as fixed-diameter tubes on `geometry`.
Mask rater_mask(std::span<const Curve> curves, const GridGeometry& geometry, double diameter_mm);

/// Working grid (isotropic `spacing_mm`) enclosing all curves with `margin_mm`.
GridGeometry bounding_grid(std::span<const Curve> curves, double spacing_mm, double margin_mm);

struct ReferenceOptions {
  double diameter_mm = 3.0;
  double spacing_mm = 0.4;
  /// Trim each side's expert curves to the shortest before rasterizing.
  bool trim_to_shortest = true;
  double vertex_spacing_mm = kConsensusVertexSpacing;
  PathOptions paths;
};

struct ScanConsensus {
  ConsensusCurves curves;
  GridGeometry grid;
  /// Empty when fewer than two raters had curves.
  Mask consensus;
  std::size_t raters = 0;
  std::size_t ties = 0;
  double midplane_x_mm = 0.0;
};

/// Full reference construction for one scan: expert curves -> tube masks on
/// a bounding grid -> label vote -> consensus curves. The mid-plane is the
/// mean of the left and right expert centroids' x when both sides exist.
ScanConsensus scan_consensus(const AnnotationSet& scan, std::span<const std::string> experts,
                             const ReferenceOptions& options = {});

}  // namespace canaleval
