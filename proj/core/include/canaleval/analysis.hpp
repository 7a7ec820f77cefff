#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "canaleval/annotation.hpp"
#include "canaleval/geometry.hpp"
#include "canaleval/metrics.hpp"

namespace canaleval {

/// Order statistics use linear interpolation between closest ranks
/// (h = (n - 1) p); IQR is reported as the single width Q3 - Q1.
struct Summary {
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double sd = 0.0;
  double sd_population = 0.0;
};

Summary summarize(std::span<const double> values);

/// Linear-interpolation quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

enum class WilcoxonMode { exact, approx, automatic };

struct WilcoxonResult {
  /// Sum of ranks of the positive differences.
  double statistic = 0.0;
  double p_two_sided = 1.0;
  /// Pairs used after discarding zero differences.
  std::size_t n = 0;
  std::size_t zeros_dropped = 0;
  bool exact = false;
  /// Standard score of the normal approximation (0 in exact mode).
  double z = 0.0;
};

/// Paired signed-rank test on a - b. Zero differences are discarded, tied
/// magnitudes get average ranks. Exact null distribution up to n = 25 in
/// automatic mode, otherwise normal approximation with continuity and tie
/// correction.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMode mode = WilcoxonMode::automatic);

inline constexpr std::size_t kWilcoxonExactLimit = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

struct AnalysisOptions {
  double step_mm = kDefaultMetricStep;
  double margin_mm = kDefaultSafetyMargin;
  /// Truncate each canal group to its shortest curve before comparing.
  bool trim_to_shortest = true;
};

/// One canal's curves from every observer that has it, trimmed and densified.
struct CanalGroup {
  std::string scan_id;
  std::string device;
  Side side = Side::left;
  std::map<std::string, Curve> curves;
};

/// Canal groups of a study in (scan_id, side) order, restricted to `observers`.
std::vector<CanalGroup> canal_groups(std::span<const AnnotationSet> study, std::span<const std::string> observers,
                                     const AnalysisOptions& options);

enum class PairMetric { mcd, margin };

struct MatrixCell {
  std::vector<double> values;
  std::optional<Summary> summary;
  /// Canals skipped because either observer lacked them.
  std::size_t excluded = 0;
};

/// Row = ground truth observer, column = estimator.
struct PairwiseMatrix {
  PairMetric metric = PairMetric::mcd;
  std::vector<std::string> observers;
  std::vector<std::vector<MatrixCell>> cells;
  std::vector<CurveMetricRow> rows;
};

PairwiseMatrix pairwise_matrix(std::span<const AnnotationSet> study, std::span<const std::string> observers,
                               PairMetric metric, const AnalysisOptions& options = {});

struct VariabilityRecord {
  std::string scan_id;
  std::string device;
  Side side = Side::left;
  /// SMCD of the expert pair with the largest directional MCD.
  double iv_mm = 0.0;
  std::string iv_first;
  std::string iv_second;
  double iv_selection_mcd_mm = 0.0;
  /// SMCD between the system and the expert with the largest MCD(expert, system).
  std::optional<double> dv_mm;
  std::string dv_expert;
  double dv_selection_mcd_mm = 0.0;
  bool system_failure = false;
};

/// Highest interobserver (IV) and system-to-expert (DV) variability per canal.
/// Canals with fewer than two experts are skipped.
std::vector<VariabilityRecord> highest_variability(std::span<const AnnotationSet> study,
                                                   std::span<const std::string> experts,
                                                   const std::string& system_id,
                                                   const AnalysisOptions& options = {});

struct PairedComparison {
  std::size_t canals = 0;
  std::optional<Summary> iv;
  std::optional<Summary> dv;
  std::optional<WilcoxonResult> test;
  std::string note;
};

/// IV vs DV over canals with a system result.
PairedComparison compare_variability(std::span<const VariabilityRecord> records,
                                     WilcoxonMode mode = WilcoxonMode::automatic);

struct ReferenceRow {
  std::string scan_id;
  Side side = Side::left;
  std::string observer;
  double smcd_mm = 0.0;
};

struct ReferenceComparison {
  std::vector<ReferenceRow> rows;
  std::map<std::string, Summary> per_observer;
  std::vector<std::string> warnings;
};

/// SMCD of every observer against the consensus reference, per canal.
/// `reference` maps scan id to its consensus curves.
ReferenceComparison reference_comparison(std::span<const AnnotationSet> study,
                                         std::span<const std::string> observers,
                                         const std::map<std::string, std::vector<Curve>>& reference,
                                         const AnalysisOptions& options = {});

/// Summaries of reference rows per observer; a pure function of the rows.
std::map<std::string, Summary> summarize_reference(std::span<const ReferenceRow> rows);

}  // namespace canaleval
