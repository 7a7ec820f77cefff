#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace canaleval::cli {

/// Flags recorded verbatim in report metadata.
using Flags = std::vector<std::pair<std::string, std::string>>;

struct ResampleOptions {
  std::string in;
  std::string out;
  double spacing_mm = 0.4;
};

struct ExtractOptions {
  std::string prob;
  std::string out;
  std::string scan_id;
  std::string device = "unknown";
  std::string system_id = "system";
  double threshold = 0.5;
  double gap_mm = 4.0;
  double max_angle_deg = 60.0;
  double min_length_mm = 30.0;
  double max_length_mm = 120.0;
  std::optional<double> midplane_x_mm;
};

struct MetricsOptions {
  std::string gt;
  std::string est;
  std::string out;
  double margin_mm = 2.0;
  double step_mm = 0.2;
  bool dice = false;
  double diameter_mm = 3.0;
  std::string grid;
  bool trim = true;
};

struct PairwiseOptions {
  std::string annotations;
  std::string system;
  std::string metric = "mcd";
  std::string out;
  double margin_mm = 2.0;
  double step_mm = 0.2;
  bool trim = true;
};

struct ConsensusOptions {
  std::string annotations;
  std::string system;
  std::string out;
  double diameter_mm = 3.0;
  double spacing_mm = 0.4;
  double step_mm = 0.2;
  bool trim = true;
  bool save_masks = false;
};

struct VariabilityOptions {
  std::string annotations;
  std::string system;
  std::string out;
  std::string wilcoxon = "auto";
  double step_mm = 0.2;
  bool trim = true;
};

struct ProfileOptions {
  std::string annotations;
  std::string ref;
  std::string system;
  std::string out;
  int points = 200;
  double step_mm = 0.2;
  bool trim = true;
};

struct PhantomOptions {
  std::uint64_t seed = 1;
  int scans = 1;
  int raters = 4;
  double sigma_mm = 0.3;
  double max_truncation_mm = 5.0;
  int blobs = 6;
  double diameter_mm = 3.0;
  std::string out;
};

void run_resample(const ResampleOptions& o);
void run_extract(const ExtractOptions& o);
void run_metrics(const MetricsOptions& o, const Flags& flags, std::size_t workers);
void run_pairwise(const PairwiseOptions& o, const Flags& flags);
void run_consensus(const ConsensusOptions& o, const Flags& flags, std::size_t workers);
void run_variability(const VariabilityOptions& o, const Flags& flags);
void run_profile(const ProfileOptions& o, const Flags& flags);
void run_phantom(const PhantomOptions& o, std::size_t workers);

}  // namespace canaleval::cli
