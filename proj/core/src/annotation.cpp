#include "canaleval/annotation.hpp"

#include <algorithm>
#include <array>

#include "canaleval/error.hpp"

namespace canaleval {

std::span<const std::string_view> known_conditions() {
  static constexpr std::array<std::string_view, 5> kConditions{
      "movement_artifact", "metal_artifact", "bisagittal_osteotomy", "difficult_pathology",
      "difficult_bone_structure"};
  return kConditions;
}

bool is_known_condition(std::string_view flag) {
  const auto all = known_conditions();
  return std::find(all.begin(), all.end(), flag) != all.end();
}

std::string_view to_string(PointKind kind) noexcept {
  return kind == PointKind::control_points ? "control_points" : "polyline";
}

std::string_view to_string(Orientation orientation) noexcept {
  return orientation == Orientation::anterior_first ? "anterior_first" : "posterior_first";
}

Curve to_curve(const CanalAnnotation& canal, const std::string& rater_id, double spline_step_mm) {
  ControlPointAnnotation source{canal.points_mm, canal.side, rater_id, canal.clarity};
  if (canal.orientation == Orientation::posterior_first) {
    std::reverse(source.control_points.begin(), source.control_points.end());
  }
  if (canal.kind == PointKind::control_points) return interpolate_spline(source, spline_step_mm);

  if (source.control_points.size() < 2) {
    throw Error(ErrorKind::invalid_annotation, "polyline canal for '" + rater_id + "' has fewer than 2 points");
  }
  Curve curve{std::move(source.control_points), canal.side, rater_id};
  validate(curve);
  return curve;
}

CanalAnnotation polyline_entry(const Curve& curve) {
  CanalAnnotation entry;
  entry.side = curve.side;
  entry.kind = PointKind::polyline;
  entry.points_mm = curve.points;
  return entry;
}

const Curve* AnnotationSet::find(const std::string& observer, Side side) const {
  const auto it = observers.find(observer);
  if (it == observers.end()) return nullptr;
  const auto jt = it->second.find(side);
  return jt == it->second.end() ? nullptr : &jt->second;
}

std::vector<AnnotationSet> group_by_scan(std::span<const AnnotationDocument> documents, double spline_step_mm) {
  std::map<std::string, AnnotationSet> scans;
  for (const AnnotationDocument& doc : documents) {
    AnnotationSet& set = scans[doc.scan_id];
    set.scan_id = doc.scan_id;
    if (set.device.empty()) set.device = doc.device;
    for (const std::string& c : doc.conditions) {
      if (std::find(set.conditions.begin(), set.conditions.end(), c) == set.conditions.end()) {
        set.conditions.push_back(c);
      }
    }
    auto& canals = set.observers[doc.rater_id];
    canals.clear();
    for (const CanalAnnotation& canal : doc.canals) {
      canals.insert_or_assign(canal.side, to_curve(canal, doc.rater_id, spline_step_mm));
    }
  }
  std::vector<AnnotationSet> out;
  out.reserve(scans.size());
  for (auto& [id, set] : scans) {
    std::sort(set.conditions.begin(), set.conditions.end());
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace canaleval
