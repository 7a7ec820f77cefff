#include "canaleval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "canaleval/io.hpp"

#ifndef CANALEVAL_VERSION
#define CANALEVAL_VERSION "0.0.0"
#endif

namespace canaleval {

using ojson = nlohmann::ordered_json;

std::string_view library_version() noexcept { return CANALEVAL_VERSION; }

namespace {

ojson metadata_json(const RunMetadata& meta) {
  ojson j;
  j["tool"] = "canaleval";
  j["version"] = library_version();
  j["command"] = meta.command;
  ojson params = ojson::object();
  for (const auto& [k, v] : meta.parameters) params[k] = v;
  j["parameters"] = std::move(params);
  j["inputs"] = meta.inputs;
  j["quantiles"] = "linear interpolation between order statistics, h = (n - 1) p";
  j["iqr"] = "single width q3 - q1";
  j["sd"] = "sample (n - 1); population value reported as sd_population";
  j["wilcoxon"] =
      "two-sided signed-rank; zero differences discarded; tied magnitudes get average ranks; exact null "
      "distribution for n <= 25, otherwise normal approximation with tie-corrected variance and continuity "
      "correction";
  j["distance_decimals"] = kDistanceDecimals;
  j["proportion_decimals"] = kProportionDecimals;
  return j;
}

ojson summary_json(const Summary& s) {
  ojson j;
  j["n"] = s.n;
  j["median"] = s.median;
  j["q1"] = s.q1;
  j["q3"] = s.q3;
  j["iqr"] = s.iqr;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["sd_population"] = s.sd_population;
  return j;
}

ojson optional_summary(const std::optional<Summary>& s) { return s ? summary_json(*s) : ojson(nullptr); }

ojson wilcoxon_json(const WilcoxonResult& w) {
  ojson j;
  j["method"] = w.exact ? "exact" : "normal_approximation";
  j["statistic_w_plus"] = w.statistic;
  j["p_two_sided"] = w.p_two_sided;
  j["n"] = w.n;
  j["zeros_dropped"] = w.zeros_dropped;
  j["z"] = w.z;
  return j;
}

ojson comparison_json(const PairedComparison& c) {
  ojson j;
  j["canals"] = c.canals;
  j["iv"] = optional_summary(c.iv);
  j["dv"] = optional_summary(c.dv);
  j["wilcoxon"] = c.test ? wilcoxon_json(*c.test) : ojson(nullptr);
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

std::string finish(ojson body, const RunMetadata& meta) {
  ojson j;
  j["metadata"] = metadata_json(meta);
  for (auto& [k, v] : body.items()) j[k] = std::move(v);
  j["warnings"] = meta.warnings;
  return j.dump(2) + "\n";
}

std::string dist(double v) { return format_fixed(v, kDistanceDecimals); }
std::string prop(double v) { return format_fixed(v, kProportionDecimals); }

std::string metric_csv(std::span<const CurveMetricRow> rows) {
  std::string out = "scan_id,side,truth,estimate,mcd_mm,smcd_mm,margin_proportion,dice\n";
  for (const CurveMetricRow& r : rows) {
    out += r.scan_id + "," + std::string(to_string(r.side)) + "," + r.truth_source + "," + r.estimate_source + "," +
           dist(r.mcd_mm) + "," + dist(r.smcd_mm) + "," + prop(r.margin_proportion) + "," +
           (r.dice ? prop(*r.dice) : std::string()) + "\n";
  }
  return out;
}

}  // namespace

std::vector<CurveMetricRow> rounded(std::span<const CurveMetricRow> rows) {
  std::vector<CurveMetricRow> out(rows.begin(), rows.end());
  for (CurveMetricRow& r : out) {
    r.mcd_mm = round_fixed(r.mcd_mm, kDistanceDecimals);
    r.smcd_mm = round_fixed(r.smcd_mm, kDistanceDecimals);
    r.margin_proportion = round_fixed(r.margin_proportion, kProportionDecimals);
    if (r.dice) r.dice = round_fixed(*r.dice, kProportionDecimals);
  }
  return out;
}

std::vector<ReferenceRow> rounded(std::span<const ReferenceRow> rows) {
  std::vector<ReferenceRow> out(rows.begin(), rows.end());
  for (ReferenceRow& r : out) r.smcd_mm = round_fixed(r.smcd_mm, kDistanceDecimals);
  return out;
}

std::vector<VariabilityRecord> rounded(std::span<const VariabilityRecord> records) {
  std::vector<VariabilityRecord> out(records.begin(), records.end());
  for (VariabilityRecord& r : out) {
    r.iv_mm = round_fixed(r.iv_mm, kDistanceDecimals);
    r.iv_selection_mcd_mm = round_fixed(r.iv_selection_mcd_mm, kDistanceDecimals);
    if (r.dv_mm) r.dv_mm = round_fixed(*r.dv_mm, kDistanceDecimals);
    r.dv_selection_mcd_mm = round_fixed(r.dv_selection_mcd_mm, kDistanceDecimals);
  }
  return out;
}

void sort_by_canal(std::vector<CurveMetricRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const CurveMetricRow& a, const CurveMetricRow& b) {
    if (a.scan_id != b.scan_id) return a.scan_id < b.scan_id;
    return a.side < b.side;
  });
}

ReportFiles metrics_report(std::span<const CurveMetricRow> rows, const RunMetadata& meta) {
  const std::vector<CurveMetricRow> r = rounded(rows);
  std::vector<double> mcd, smcd, margin, dice_values;
  for (const CurveMetricRow& row : r) {
    mcd.push_back(row.mcd_mm);
    smcd.push_back(row.smcd_mm);
    margin.push_back(row.margin_proportion);
    if (row.dice) dice_values.push_back(*row.dice);
  }
  ojson body;
  body["canals"] = r.size();
  ojson summaries = ojson::object();
  if (!r.empty()) {
    summaries["mcd_mm"] = summary_json(summarize(mcd));
    summaries["smcd_mm"] = summary_json(summarize(smcd));
    summaries["margin_proportion"] = summary_json(summarize(margin));
  }
  if (!dice_values.empty()) summaries["dice"] = summary_json(summarize(dice_values));
  body["summaries"] = std::move(summaries);
  return {metric_csv(r), finish(std::move(body), meta)};
}

ReportFiles pairwise_report(const PairwiseMatrix& matrix, const RunMetadata& meta) {
  const std::vector<CurveMetricRow> r = rounded(matrix.rows);
  const std::size_t k = matrix.observers.size();
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  for (const CurveMetricRow& row : r) {
    values[{row.truth_source, row.estimate_source}].push_back(matrix.metric == PairMetric::mcd ? row.mcd_mm
                                                                                            : row.margin_proportion);
  }
  ojson body;
  body["metric"] = matrix.metric == PairMetric::mcd ? "mcd" : "margin";
  body["observers"] = matrix.observers;
  body["layout"] = "cells[i][j]: observer i as ground truth, observer j as estimator";
  ojson cells = ojson::array();
  for (std::size_t i = 0; i < k; ++i) {
    ojson line = ojson::array();
    for (std::size_t j = 0; j < k; ++j) {
      ojson cell;
      cell["truth"] = matrix.observers[i];
      cell["estimate"] = matrix.observers[j];
      const auto it = values.find({matrix.observers[i], matrix.observers[j]});
      cell["summary"] = it == values.end() ? ojson(nullptr) : summary_json(summarize(it->second));
      cell["excluded_canals"] = matrix.cells[i][j].excluded;
      line.push_back(std::move(cell));
    }
    cells.push_back(std::move(line));
  }
  body["cells"] = std::move(cells);
  return {metric_csv(r), finish(std::move(body), meta)};
}

ReportFiles variability_report(std::span<const VariabilityRecord> records, const RunMetadata& meta,
                               WilcoxonMode mode) {
  const std::vector<VariabilityRecord> r = rounded(records);
  std::string csv =
      "scan_id,side,device,iv_mm,iv_first,iv_second,iv_selection_mcd_mm,dv_mm,dv_expert,dv_selection_mcd_mm,"
      "system_failure\n";
  std::size_t failures = 0;
  std::map<std::string, std::vector<VariabilityRecord>> by_device;
  for (const VariabilityRecord& v : r) {
    csv += v.scan_id + "," + std::string(to_string(v.side)) + "," + v.device + "," + dist(v.iv_mm) + "," +
           v.iv_first + "," + v.iv_second + "," + dist(v.iv_selection_mcd_mm) + "," +
           (v.dv_mm ? dist(*v.dv_mm) : std::string()) + "," + v.dv_expert + "," +
           (v.dv_mm ? dist(v.dv_selection_mcd_mm) : std::string()) + "," + (v.system_failure ? "1" : "0") + "\n";
    failures += v.system_failure;
    by_device[v.device].push_back(v);
  }
  ojson body;
  body["canals"] = r.size();
  body["system_failures"] = failures;
  body["overall"] = comparison_json(compare_variability(r, mode));
  ojson devices = ojson::object();
  for (const auto& [device, list] : by_device) devices[device] = comparison_json(compare_variability(list, mode));
  body["by_device"] = std::move(devices);
  return {std::move(csv), finish(std::move(body), meta)};
}

ReportFiles reference_report(const ReferenceComparison& comparison, const RunMetadata& meta) {
  const std::vector<ReferenceRow> r = rounded(comparison.rows);
  std::string csv = "scan_id,side,observer,smcd_mm\n";
  for (const ReferenceRow& row : r) {
    csv += row.scan_id + "," + std::string(to_string(row.side)) + "," + row.observer + "," + dist(row.smcd_mm) + "\n";
  }
  ojson body;
  body["reference"] = "consensus";
  ojson per = ojson::object();
  for (const auto& [id, s] : summarize_reference(r)) per[id] = summary_json(s);
  body["per_observer_smcd_mm"] = std::move(per);
  RunMetadata m = meta;
  m.warnings.insert(m.warnings.end(), comparison.warnings.begin(), comparison.warnings.end());
  return {std::move(csv), finish(std::move(body), m)};
}

ReportFiles profile_report(std::span<const ProfileRow> rows, const RunMetadata& meta) {
  std::size_t points = rows.empty() ? 0 : rows.front().values.size();
  std::string csv = "scan_id,side,observer";
  for (std::size_t i = 0; i < points; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, ",p%03zu", i);
    csv += name;
  }
  csv += "\n";
  for (const ProfileRow& row : rows) {
    csv += row.scan_id + "," + std::string(to_string(row.side)) + "," + row.observer;
    for (double v : row.values) csv += "," + format_fixed(v, kProfileDecimals);
    csv += "\n";
  }
  ojson body;
  body["points_per_canal"] = points;
  body["rows"] = rows.size();
  body["index_0"] = "anterior end";
  return {std::move(csv), finish(std::move(body), meta)};
}

}  // namespace canaleval
