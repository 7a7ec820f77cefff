#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "canaleval/geometry.hpp"

namespace canaleval {

/// Closed vocabulary of scan condition flags. Unknown flags are kept verbatim
/// by the file loader but reported as warnings.
std::span<const std::string_view> known_conditions();
bool is_known_condition(std::string_view flag);

/// How the stored points of a canal become a curve.
enum class PointKind {
  control_points,  ///< spline-interpolated rater control points
  polyline,        ///< dense curve used as-is (system output, consensus, truth)
};

enum class Orientation { anterior_first, posterior_first };

struct CanalAnnotation {
  Side side = Side::left;
  Clarity clarity = Clarity::clear;
  PointKind kind = PointKind::control_points;
  Orientation orientation = Orientation::anterior_first;
  std::vector<Point3> points_mm;

  friend bool operator==(const CanalAnnotation&, const CanalAnnotation&) = default;
};

/// Contents of one annotation file: one rater's canals on one scan.
struct AnnotationDocument {
  std::string scan_id;
  std::string rater_id;
  std::string device;
  std::vector<std::string> conditions;
  std::vector<CanalAnnotation> canals;

  friend bool operator==(const AnnotationDocument&, const AnnotationDocument&) = default;
};

/// Curve of a canal entry, interpolated (control points) or copied
/// (polyline) and flipped to anterior-first when stored the other way.
Curve to_curve(const CanalAnnotation& canal, const std::string& rater_id, double spline_step_mm);

/// Canal entry storing `curve` as a polyline.
CanalAnnotation polyline_entry(const Curve& curve);

/// All observers' curves on one scan.
struct AnnotationSet {
  std::string scan_id;
  std::string device;
  std::vector<std::string> conditions;
  /// observer id -> side -> curve
  std::map<std::string, std::map<Side, Curve>> observers;

  const Curve* find(const std::string& observer, Side side) const;
};

/// Groups documents by scan id (sorted) and interpolates every canal.
/// Later documents for the same (scan, rater) replace earlier ones.
std::vector<AnnotationSet> group_by_scan(std::span<const AnnotationDocument> documents,
                                         double spline_step_mm);

std::string_view to_string(PointKind kind) noexcept;
std::string_view to_string(Orientation orientation) noexcept;

}  // namespace canaleval
