#include "canaleval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "canaleval/error.hpp"

namespace canaleval {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::invalid_input, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::invalid_parameter, "quantile probability outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::invalid_input, "summarize of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.n = sorted.size();
  s.median = quantile_sorted(sorted, 0.5);
  s.q1 = quantile_sorted(sorted, 0.25);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.iqr = s.q3 - s.q1;
  // Summation in input order keeps the mean independent of the sort.
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd_population = std::sqrt(ss / static_cast<double>(s.n));
  s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  return s;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, WilcoxonMode mode) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_input, "wilcoxon samples differ in length");
  WilcoxonResult out;
  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw Error(ErrorKind::invalid_input, "wilcoxon sample contains non-finite values");
    if (d == 0.0) {
      ++out.zeros_dropped;
    } else {
      diffs.push_back(d);
    }
  }
  if (diffs.empty()) throw Error(ErrorKind::degenerate_test, "all paired differences are zero");
  const std::size_t n = diffs.size();
  if (n < kWilcoxonMinPairs) {
    throw Error(ErrorKind::invalid_input, "wilcoxon needs at least " + std::to_string(kWilcoxonMinPairs) +
                                              " nonzero differences, got " + std::to_string(n));
  }
  out.n = n;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::fabs(diffs[i]) < std::fabs(diffs[j]); });
  // Doubled average ranks are integers: tie group spanning ranks r..s gets r + s.
  std::vector<std::int64_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]])) ++j;
    const auto r2 = static_cast<std::int64_t>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  std::int64_t w2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w2 += rank2[i];
  }
  out.statistic = static_cast<double>(w2) / 2.0;

  const bool exact = mode == WilcoxonMode::exact || (mode == WilcoxonMode::automatic && n <= kWilcoxonExactLimit);
  out.exact = exact;
  if (exact) {
    if (n > 60) throw Error(ErrorKind::invalid_parameter, "exact wilcoxon limited to 60 pairs");
    const std::int64_t total2 = std::accumulate(rank2.begin(), rank2.end(), std::int64_t{0});
    // count[s]: sign assignments whose positive doubled-rank sum is s.
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    std::int64_t reach = 0;
    for (std::int64_t r : rank2) {
      for (std::int64_t s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
      reach += r;
    }
    double le = 0.0, ge = 0.0, all = 0.0;
    for (std::int64_t s = 0; s <= total2; ++s) {
      const double c = count[static_cast<std::size_t>(s)];
      all += c;
      if (s <= w2) le += c;
      if (s >= w2) ge += c;
    }
    out.p_two_sided = std::min(1.0, 2.0 * std::min(le, ge) / all);
  } else {
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    const double sd = std::sqrt(var);
    const double dev = out.statistic - mean;
    const double corrected = std::max(0.0, std::fabs(dev) - 0.5);
    out.z = std::copysign(corrected / sd, dev);
    out.p_two_sided = std::min(1.0, std::erfc(corrected / sd / std::sqrt(2.0)));
  }
  return out;
}

namespace {

std::map<std::string, Curve> prepare(std::map<std::string, Curve> curves, const AnalysisOptions& options) {
  if (options.trim_to_shortest && curves.size() >= 2) {
    std::vector<Curve> list;
    for (auto& [id, c] : curves) list.push_back(c);
    std::vector<Curve> trimmed = trim_to_shortest(list);
    std::size_t k = 0;
    for (auto& [id, c] : curves) c = std::move(trimmed[k++]);
  }
  for (auto& [id, c] : curves) c = densified(c, options.step_mm);
  return curves;
}

}  // namespace

std::vector<CanalGroup> canal_groups(std::span<const AnnotationSet> study, std::span<const std::string> observers,
                                     const AnalysisOptions& options) {
  std::vector<const AnnotationSet*> scans;
  for (const AnnotationSet& s : study) scans.push_back(&s);
  std::sort(scans.begin(), scans.end(),
            [](const AnnotationSet* a, const AnnotationSet* b) { return a->scan_id < b->scan_id; });

  std::vector<CanalGroup> out;
  for (const AnnotationSet* scan : scans) {
    for (Side side : {Side::left, Side::right}) {
      std::map<std::string, Curve> curves;
      for (const std::string& id : observers) {
        if (const Curve* c = scan->find(id, side)) curves.emplace(id, *c);
      }
      if (curves.empty()) continue;
      out.push_back({scan->scan_id, scan->device, side, prepare(std::move(curves), options)});
    }
  }
  return out;
}

PairwiseMatrix pairwise_matrix(std::span<const AnnotationSet> study, std::span<const std::string> observers,
                               PairMetric metric, const AnalysisOptions& options) {
  if (observers.size() < 2) throw Error(ErrorKind::invalid_input, "pairwise matrix needs at least two observers");
  PairwiseMatrix m;
  m.metric = metric;
  m.observers.assign(observers.begin(), observers.end());
  const std::size_t k = observers.size();
  m.cells.assign(k, std::vector<MatrixCell>(k));

  for (const CanalGroup& group : canal_groups(study, observers, options)) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const auto ti = group.curves.find(observers[i]);
        const auto ej = group.curves.find(observers[j]);
        MatrixCell& cell = m.cells[i][j];
        if (ti == group.curves.end() || ej == group.curves.end()) {
          ++cell.excluded;
          continue;
        }
        CurveMetricRow row;
        row.scan_id = group.scan_id;
        row.side = group.side;
        row.truth_source = observers[i];
        row.estimate_source = observers[j];
        row.mcd_mm = mcd(ti->second, ej->second);
        row.smcd_mm = smcd(ti->second, ej->second);
        row.margin_proportion = margin_proportion(ti->second, ej->second, options.margin_mm);
        cell.values.push_back(metric == PairMetric::mcd ? row.mcd_mm : row.margin_proportion);
        m.rows.push_back(std::move(row));
      }
    }
  }
  for (auto& line : m.cells) {
    for (MatrixCell& cell : line) {
      if (!cell.values.empty()) cell.summary = summarize(cell.values);
    }
  }
  return m;
}

std::vector<VariabilityRecord> highest_variability(std::span<const AnnotationSet> study,
                                                   std::span<const std::string> experts,
                                                   const std::string& system_id, const AnalysisOptions& options) {
  if (std::find(experts.begin(), experts.end(), system_id) != experts.end()) {
    throw Error(ErrorKind::invalid_input, "system id '" + system_id + "' is also listed as an expert");
  }
  std::vector<std::string> observers(experts.begin(), experts.end());
  observers.push_back(system_id);

  std::vector<VariabilityRecord> out;
  for (const CanalGroup& group : canal_groups(study, observers, options)) {
    std::vector<const std::string*> present;
    for (const std::string& e : experts) {
      if (group.curves.count(e) != 0) present.push_back(&e);
    }
    if (present.size() < 2) continue;

    VariabilityRecord rec;
    rec.scan_id = group.scan_id;
    rec.device = group.device;
    rec.side = group.side;
    double best = -1.0;
    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t j = i + 1; j < present.size(); ++j) {
        const Curve& a = group.curves.at(*present[i]);
        const Curve& b = group.curves.at(*present[j]);
        const double ab = mcd(a, b);
        const double ba = mcd(b, a);
        const double score = std::max(ab, ba);
        if (score > best) {
          best = score;
          rec.iv_first = *present[i];
          rec.iv_second = *present[j];
          rec.iv_selection_mcd_mm = score;
          rec.iv_mm = (ab + ba) / 2.0;
        }
      }
    }

    const auto sys = group.curves.find(system_id);
    if (sys == group.curves.end()) {
      rec.system_failure = true;
    } else {
      double worst = -1.0;
      for (const std::string* e : present) {
        const Curve& truth = group.curves.at(*e);
        const double d = mcd(truth, sys->second);
        if (d > worst) {
          worst = d;
          rec.dv_expert = *e;
          rec.dv_selection_mcd_mm = d;
          rec.dv_mm = (d + mcd(sys->second, truth)) / 2.0;
        }
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

PairedComparison compare_variability(std::span<const VariabilityRecord> records, WilcoxonMode mode) {
  PairedComparison out;
  std::vector<double> iv, dv;
  for (const VariabilityRecord& r : records) {
    if (!r.dv_mm) continue;
    iv.push_back(r.iv_mm);
    dv.push_back(*r.dv_mm);
  }
  out.canals = iv.size();
  if (iv.empty()) {
    out.note = "no canal has both interobserver and system variability";
    return out;
  }
  out.iv = summarize(iv);
  out.dv = summarize(dv);
  try {
    out.test = wilcoxon_signed_rank(iv, dv, mode);
  } catch (const Error& e) {
    out.note = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return out;
}

std::map<std::string, Summary> summarize_reference(std::span<const ReferenceRow> rows) {
  std::map<std::string, std::vector<double>> values;
  for (const ReferenceRow& r : rows) values[r.observer].push_back(r.smcd_mm);
  std::map<std::string, Summary> out;
  for (const auto& [id, v] : values) out.emplace(id, summarize(v));
  return out;
}

ReferenceComparison reference_comparison(std::span<const AnnotationSet> study, std::span<const std::string> observers,
                                         const std::map<std::string, std::vector<Curve>>& reference,
                                         const AnalysisOptions& options) {
  static const std::string kReferenceKey = "\x01reference";
  ReferenceComparison out;
  std::vector<const AnnotationSet*> scans;
  for (const AnnotationSet& s : study) scans.push_back(&s);
  std::sort(scans.begin(), scans.end(),
            [](const AnnotationSet* a, const AnnotationSet* b) { return a->scan_id < b->scan_id; });

  for (const AnnotationSet* scan : scans) {
    const auto ref = reference.find(scan->scan_id);
    for (Side side : {Side::left, Side::right}) {
      const Curve* ref_curve = nullptr;
      if (ref != reference.end()) {
        for (const Curve& c : ref->second) {
          if (c.side == side) ref_curve = &c;
        }
      }
      if (ref_curve == nullptr) {
        out.warnings.push_back(scan->scan_id + " " + std::string(to_string(side)) +
                               ": no consensus curve, canal skipped");
        continue;
      }
      std::map<std::string, Curve> curves;
      curves.emplace(kReferenceKey, *ref_curve);
      for (const std::string& id : observers) {
        if (const Curve* c = scan->find(id, side)) curves.emplace(id, *c);
      }
      curves = prepare(std::move(curves), options);
      const Curve& r = curves.at(kReferenceKey);
      for (const std::string& id : observers) {
        const auto it = curves.find(id);
        if (it == curves.end()) continue;
        out.rows.push_back({scan->scan_id, side, id, smcd(r, it->second)});
      }
    }
  }
  out.per_observer = summarize_reference(out.rows);
  return out;
}

}  // namespace canaleval
