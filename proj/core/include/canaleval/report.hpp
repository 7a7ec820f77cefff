#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "canaleval/analysis.hpp"
#include "canaleval/metrics.hpp"

namespace canaleval {

std::string_view library_version() noexcept;

/// Digits after the decimal point in emitted tables. Every summary in a
/// report is computed from the rounded values, so it can be recomputed
/// bit-identically from the table alone.
inline constexpr int kDistanceDecimals = 3;
inline constexpr int kProportionDecimals = 6;
inline constexpr int kProfileDecimals = 6;

struct RunMetadata {
  std::string command;
  /// Flag name -> value as given, in a fixed order.
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::string> inputs;
  std::vector<std::string> warnings;
};

/// Tabular rows plus the structured summary document of one command.
struct ReportFiles {
  std::string csv;
  std::string json;
};

struct ProfileRow {
  std::string scan_id;
  Side side = Side::left;
  std::string observer;
  std::vector<double> values;
};

/// Rows rounded exactly as they are emitted.
std::vector<CurveMetricRow> rounded(std::span<const CurveMetricRow> rows);
std::vector<ReferenceRow> rounded(std::span<const ReferenceRow> rows);
std::vector<VariabilityRecord> rounded(std::span<const VariabilityRecord> records);

ReportFiles metrics_report(std::span<const CurveMetricRow> rows, const RunMetadata& meta);
ReportFiles pairwise_report(const PairwiseMatrix& matrix, const RunMetadata& meta);
ReportFiles variability_report(std::span<const VariabilityRecord> records, const RunMetadata& meta,
                               WilcoxonMode mode = WilcoxonMode::automatic);
ReportFiles reference_report(const ReferenceComparison& comparison, const RunMetadata& meta);
ReportFiles profile_report(std::span<const ProfileRow> rows, const RunMetadata& meta);

/// Sorts rows by (scan_id, side) keeping the relative order of equal keys.
void sort_by_canal(std::vector<CurveMetricRow>& rows);

}  // namespace canaleval
