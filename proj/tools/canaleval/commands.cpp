#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "canaleval/analysis.hpp"
#include "canaleval/consensus.hpp"
#include "canaleval/error.hpp"
#include "canaleval/extraction.hpp"
#include "canaleval/io.hpp"
#include "canaleval/phantom.hpp"
#include "canaleval/report.hpp"
#include "workers.hpp"

namespace canaleval::cli {

namespace fs = std::filesystem;

namespace {

/// Step used to interpolate rater control points into dense curves.
constexpr double kSplineStep = 0.1;
constexpr const char* kConsensusId = "consensus";

struct Study {
  std::vector<AnnotationSet> scans;
  std::vector<std::string> experts;
  std::vector<std::string> systems;
  std::vector<std::string> warnings;
};

std::vector<std::string> rater_ids(std::span<const AnnotationDocument> docs) {
  std::set<std::string> ids;
  for (const AnnotationDocument& d : docs) ids.insert(d.rater_id);
  return {ids.begin(), ids.end()};
}

Study load_study(const std::string& annotations, const std::string& system) {
  Study s;
  LoadedAnnotations experts = load_annotations(annotations);
  s.experts = rater_ids(experts.documents);
  s.warnings = std::move(experts.warnings);
  std::vector<AnnotationDocument> docs = std::move(experts.documents);
  if (!system.empty()) {
    LoadedAnnotations sys = load_annotations(system);
    s.systems = rater_ids(sys.documents);
    for (const std::string& id : s.systems) {
      if (std::find(s.experts.begin(), s.experts.end(), id) != s.experts.end()) {
        throw Error(ErrorKind::invalid_input, "system rater id '" + id + "' also appears among the annotations");
      }
    }
    s.warnings.insert(s.warnings.end(), sys.warnings.begin(), sys.warnings.end());
    std::move(sys.documents.begin(), sys.documents.end(), std::back_inserter(docs));
  }
  s.scans = group_by_scan(docs, kSplineStep);
  return s;
}

std::vector<std::string> observers_of(const Study& s) {
  std::vector<std::string> out = s.experts;
  out.insert(out.end(), s.systems.begin(), s.systems.end());
  return out;
}

RunMetadata metadata(const std::string& command, const Flags& flags, std::vector<std::string> inputs,
                     std::vector<std::string> warnings) {
  RunMetadata m;
  m.command = command;
  m.parameters = flags;
  m.parameters.emplace_back("spline_step_mm", format_double(kSplineStep));
  m.inputs = std::move(inputs);
  m.warnings = std::move(warnings);
  return m;
}

void write_report(const fs::path& dir, const std::string& stem, const ReportFiles& files) {
  write_file_atomic(dir / (stem + ".csv"), files.csv);
  write_file_atomic(dir / (stem + ".json"), files.json);
}

std::string canal_label(const std::string& scan, Side side) { return scan + " " + std::string(to_string(side)); }

AnnotationDocument curves_document(const std::string& scan, const std::string& rater, const std::string& device,
                                   std::span<const Curve> curves) {
  AnnotationDocument doc;
  doc.scan_id = scan;
  doc.rater_id = rater;
  doc.device = device;
  for (const Curve& c : curves) doc.canals.push_back(polyline_entry(c));
  std::sort(doc.canals.begin(), doc.canals.end(),
            [](const CanalAnnotation& a, const CanalAnnotation& b) { return a.side < b.side; });
  return doc;
}

AnalysisOptions analysis_options(double step, bool trim) {
  AnalysisOptions a;
  a.step_mm = step;
  a.trim_to_shortest = trim;
  return a;
}

}  // namespace

void run_resample(const ResampleOptions& o) {
  const VolumeHeader h = read_volume_header(o.in);
  if (h.dtype == DType::uint8) {
    save_mask(o.out, resample_nearest(load_mask(o.in), o.spacing_mm));
  } else {
    save_volume(o.out, resample_linear(load_volume(o.in), o.spacing_mm));
  }
}

void run_extract(const ExtractOptions& o) {
  const Volume volume = load_volume(o.prob);
  ExtractionParams params;
  params.threshold = o.threshold;
  params.gap_mm = o.gap_mm;
  params.max_angle_deg = o.max_angle_deg;
  params.min_length_mm = o.min_length_mm;
  params.max_length_mm = o.max_length_mm;
  params.midplane_x_mm = o.midplane_x_mm;
  CanalPair pair = extract_canals(volume, params);
  pair.left.source = o.system_id;
  pair.right.source = o.system_id;
  const std::string scan = o.scan_id.empty() ? fs::path(o.prob).stem().string() : o.scan_id;
  const std::vector<Curve> curves{pair.left, pair.right};
  const AnnotationDocument doc = curves_document(scan, o.system_id, o.device, curves);
  write_file_atomic(o.out, format_annotation(doc));
}

void run_metrics(const MetricsOptions& o, const Flags& flags, std::size_t workers) {
  LoadedAnnotations gt_docs = load_annotations(o.gt);
  LoadedAnnotations est_docs = load_annotations(o.est);
  const std::vector<AnnotationSet> gt = group_by_scan(gt_docs.documents, kSplineStep);
  const std::vector<AnnotationSet> est = group_by_scan(est_docs.documents, kSplineStep);
  std::optional<GridGeometry> grid;
  if (o.dice && !o.grid.empty()) grid = read_volume_header(o.grid).geometry;

  std::vector<std::string> warnings = gt_docs.warnings;
  warnings.insert(warnings.end(), est_docs.warnings.begin(), est_docs.warnings.end());
  std::vector<std::vector<CurveMetricRow>> per_scan(gt.size());
  std::vector<std::vector<std::string>> per_scan_warnings(gt.size());

  parallel_for(gt.size(), workers, [&](std::size_t s) {
    const AnnotationSet& truth_set = gt[s];
    const auto match = std::find_if(est.begin(), est.end(),
                                    [&](const AnnotationSet& e) { return e.scan_id == truth_set.scan_id; });
    if (match == est.end()) {
      per_scan_warnings[s].push_back(truth_set.scan_id + ": no estimate curves, scan skipped");
      return;
    }
    for (Side side : {Side::left, Side::right}) {
      for (const auto& [truth_id, truth_canals] : truth_set.observers) {
        const auto t = truth_canals.find(side);
        if (t == truth_canals.end()) continue;
        bool any = false;
        for (const auto& [est_id, est_canals] : match->observers) {
          const auto e = est_canals.find(side);
          if (e == est_canals.end()) continue;
          any = true;
          Curve tc = t->second, ec = e->second;
          if (o.trim) {
            const std::vector<Curve> trimmed = trim_to_shortest(std::vector<Curve>{tc, ec});
            tc = trimmed[0];
            ec = trimmed[1];
          }
          CurveMetricRow row = compare_curves(truth_set.scan_id, tc, ec, o.margin_mm, o.step_mm);
          if (o.dice) {
            const std::vector<Curve> both{tc, ec};
            const GridGeometry g = grid ? *grid : bounding_grid(both, 0.4, o.diameter_mm);
            row.dice = dice(rasterize_tube(tc, g, o.diameter_mm).mask, rasterize_tube(ec, g, o.diameter_mm).mask);
          }
          per_scan[s].push_back(std::move(row));
        }
        if (!any) per_scan_warnings[s].push_back(canal_label(truth_set.scan_id, side) + ": no estimate curve");
      }
    }
  });

  std::vector<CurveMetricRow> rows;
  for (std::size_t s = 0; s < gt.size(); ++s) {
    rows.insert(rows.end(), per_scan[s].begin(), per_scan[s].end());
    warnings.insert(warnings.end(), per_scan_warnings[s].begin(), per_scan_warnings[s].end());
  }
  sort_by_canal(rows);
  write_report(o.out, "metrics", metrics_report(rows, metadata("metrics", flags, {o.gt, o.est}, warnings)));
}

void run_pairwise(const PairwiseOptions& o, const Flags& flags) {
  const Study study = load_study(o.annotations, o.system);
  const std::vector<std::string> observers = observers_of(study);
  AnalysisOptions a = analysis_options(o.step_mm, o.trim);
  a.margin_mm = o.margin_mm;
  const PairMetric metric = o.metric == "margin" ? PairMetric::margin : PairMetric::mcd;
  const PairwiseMatrix m = pairwise_matrix(study.scans, observers, metric, a);
  std::vector<std::string> warnings = study.warnings;
  for (std::size_t i = 0; i < observers.size(); ++i) {
    for (std::size_t j = 0; j < observers.size(); ++j) {
      if (const std::size_t n = m.cells[i][j].excluded; n > 0) {
        warnings.push_back(observers[i] + " vs " + observers[j] + ": " + std::to_string(n) +
                           " canal(s) excluded, curve missing");
      }
    }
  }
  std::vector<std::string> inputs{o.annotations};
  if (!o.system.empty()) inputs.push_back(o.system);
  write_report(o.out, "pairwise_" + o.metric, pairwise_report(m, metadata("pairwise", flags, inputs, warnings)));
}

void run_consensus(const ConsensusOptions& o, const Flags& flags, std::size_t workers) {
  const Study study = load_study(o.annotations, o.system);
  const std::size_t n = study.scans.size();
  std::vector<AnnotationDocument> docs(n);
  std::vector<std::vector<Curve>> consensus(n);
  std::vector<std::vector<std::string>> notes(n);

  ReferenceOptions ref;
  ref.diameter_mm = o.diameter_mm;
  ref.spacing_mm = o.spacing_mm;
  ref.trim_to_shortest = o.trim;
  parallel_for(n, workers, [&](std::size_t s) {
    const AnnotationSet& scan = study.scans[s];
    ScanConsensus sc = scan_consensus(scan, study.experts, ref);
    for (const std::string& w : sc.curves.warnings) notes[s].push_back(scan.scan_id + ": " + w);
    for (Curve& c : sc.curves.curves) c.source = kConsensusId;
    docs[s] = curves_document(scan.scan_id, kConsensusId, scan.device, sc.curves.curves);
    consensus[s] = std::move(sc.curves.curves);
    if (o.save_masks && sc.consensus.size() > 0) {
      save_mask(fs::path(o.out) / "masks" / (scan.scan_id + "_consensus.cvh"), sc.consensus);
    }
  });

  std::map<std::string, std::vector<Curve>> reference;
  std::vector<std::string> warnings = study.warnings;
  for (std::size_t s = 0; s < n; ++s) {
    reference[study.scans[s].scan_id] = consensus[s];
    warnings.insert(warnings.end(), notes[s].begin(), notes[s].end());
  }
  save_annotations(fs::path(o.out) / "consensus.json", docs);

  const ReferenceComparison cmp =
      reference_comparison(study.scans, observers_of(study), reference, analysis_options(o.step_mm, o.trim));
  std::vector<std::string> inputs{o.annotations};
  if (!o.system.empty()) inputs.push_back(o.system);
  write_report(o.out, "reference", reference_report(cmp, metadata("consensus", flags, inputs, warnings)));
}

void run_variability(const VariabilityOptions& o, const Flags& flags) {
  const Study study = load_study(o.annotations, o.system);
  if (study.systems.size() != 1) {
    throw Error(ErrorKind::invalid_input, "system file must contain exactly one rater id");
  }
  const WilcoxonMode mode = o.wilcoxon == "exact"    ? WilcoxonMode::exact
                            : o.wilcoxon == "approx" ? WilcoxonMode::approx
                                                     : WilcoxonMode::automatic;
  const std::vector<VariabilityRecord> records =
      highest_variability(study.scans, study.experts, study.systems.front(), analysis_options(o.step_mm, o.trim));
  std::vector<std::string> warnings = study.warnings;
  for (const VariabilityRecord& r : records) {
    if (r.system_failure) warnings.push_back(canal_label(r.scan_id, r.side) + ": no system curve");
  }
  write_report(o.out, "variability",
               variability_report(records, metadata("variability", flags, {o.annotations, o.system}, warnings), mode));
}

void run_profile(const ProfileOptions& o, const Flags& flags) {
  const Study study = load_study(o.annotations, o.system);
  LoadedAnnotations ref_docs = load_annotations(o.ref);
  const std::vector<AnnotationSet> refs = group_by_scan(ref_docs.documents, kSplineStep);
  std::vector<std::string> warnings = study.warnings;
  warnings.insert(warnings.end(), ref_docs.warnings.begin(), ref_docs.warnings.end());
  const std::vector<std::string> observers = observers_of(study);

  std::vector<ProfileRow> rows;
  for (const AnnotationSet& scan : study.scans) {
    const auto ref_set = std::find_if(refs.begin(), refs.end(),
                                      [&](const AnnotationSet& r) { return r.scan_id == scan.scan_id; });
    for (Side side : {Side::left, Side::right}) {
      const Curve* ref = nullptr;
      if (ref_set != refs.end()) {
        for (const auto& [id, canals] : ref_set->observers) {
          if (const auto it = canals.find(side); it != canals.end()) ref = &it->second;
        }
      }
      if (ref == nullptr) {
        warnings.push_back(canal_label(scan.scan_id, side) + ": no reference curve, canal skipped");
        continue;
      }
      std::vector<Curve> group{*ref};
      std::vector<std::string> ids;
      for (const std::string& id : observers) {
        if (const Curve* c = scan.find(id, side)) {
          group.push_back(*c);
          ids.push_back(id);
        }
      }
      if (ids.empty()) continue;
      if (o.trim) group = trim_to_shortest(group);
      for (std::size_t k = 0; k < ids.size(); ++k) {
        rows.push_back({scan.scan_id, side, ids[k],
                        position_profile(group[0], densified(group[k + 1], o.step_mm), o.points)});
      }
    }
  }
  write_report(o.out, "profile", profile_report(rows, metadata("profile", flags, {o.annotations, o.ref}, warnings)));
}

void run_phantom(const PhantomOptions& o, std::size_t workers) {
  if (o.scans < 1) throw Error(ErrorKind::invalid_parameter, "--scans must be at least 1");
  const fs::path out(o.out);
  parallel_for(static_cast<std::size_t>(o.scans), workers, [&](std::size_t i) {
    PhantomSpec spec;
    spec.seed = o.seed + i;
    spec.raters = o.raters;
    spec.sigma_mm = o.sigma_mm;
    spec.max_truncation_mm = o.max_truncation_mm;
    spec.blob_count = o.blobs;
    spec.tube_diameter_mm = o.diameter_mm;
    const CanalPair truth = generate_ground_truth(spec);
    const std::string scan = phantom_scan_id(spec.seed);
    for (const AnnotationDocument& doc : simulate_raters(truth, spec)) {
      save_annotations(out / "annotations" / (scan + "_" + doc.rater_id + ".json"), std::span(&doc, 1));
    }
    const std::vector<Curve> curves{truth.left, truth.right};
    const AnnotationDocument truth_doc = curves_document(scan, "truth", kPhantomDevice, curves);
    save_annotations(out / "truth" / (scan + ".json"), std::span(&truth_doc, 1));
    save_volume(out / "volumes" / (scan + ".cvh"), render_probability_volume(truth, spec));
  });
}

}  // namespace canaleval::cli
