// canaleval: batch evaluation of mandibular canal curves.
//
// Exit codes: 0 success, 1 computation failure (JSON error record on
// stderr), 2 usage error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "canaleval/error.hpp"
#include "canaleval/io.hpp"
#include "canaleval/report.hpp"
#include "commands.hpp"
#include "workers.hpp"

namespace {

using canaleval::format_double;
using canaleval::cli::Flags;

std::string json_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

int report_failure(const std::string& command, std::string_view kind, std::string_view message) {
  std::cerr << "{\"error\": {\"command\": \"" << json_escape(command) << "\", \"kind\": \"" << json_escape(kind)
            << "\", \"message\": \"" << json_escape(message) << "\"}}\n";
  return 1;
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

int main(int argc, char** argv) {
  using namespace canaleval::cli;

  CLI::App app{"Evaluation toolkit for mandibular canal curves"};
  app.set_version_flag("--version", std::string(canaleval::library_version()));
  app.require_subcommand(1);
  int workers_flag = 0;
  app.add_option("--workers", workers_flag, "Parallel workers for per-scan work (default: CANALEVAL_WORKERS or 1)")
      ->check(CLI::NonNegativeNumber);

  ResampleOptions resample;
  auto* c_resample = app.add_subcommand("resample", "Resample a volume to isotropic spacing");
  c_resample->add_option("--in", resample.in, "Input volume header")->required()->check(CLI::ExistingFile);
  c_resample->add_option("--out", resample.out, "Output volume header")->required();
  c_resample->add_option("--spacing", resample.spacing_mm, "Target spacing in mm")->capture_default_str()->check(CLI::PositiveNumber);

  ExtractOptions extract;
  std::optional<double> midplane;
  auto* c_extract = app.add_subcommand("extract", "Extract the canal pair from a probability volume");
  c_extract->add_option("--prob", extract.prob, "Probability volume header")->required()->check(CLI::ExistingFile);
  c_extract->add_option("--out", extract.out, "Output annotation file")->required();
  c_extract->add_option("--threshold", extract.threshold, "Probability threshold")->capture_default_str();
  c_extract->add_option("--gap", extract.gap_mm, "Maximum joining gap in mm")->capture_default_str();
  c_extract->add_option("--angle", extract.max_angle_deg, "Maximum continuation angle in degrees")->capture_default_str();
  c_extract->add_option("--min-length", extract.min_length_mm, "Minimum canal length in mm")->capture_default_str();
  c_extract->add_option("--max-length", extract.max_length_mm, "Maximum canal length in mm")->capture_default_str();
  c_extract->add_option("--midplane", midplane, "Mid-sagittal plane x in mm (default: volume center)");
  c_extract->add_option("--scan-id", extract.scan_id, "Scan id (default: header file stem)");
  c_extract->add_option("--device", extract.device, "Device tag")->capture_default_str();
  c_extract->add_option("--system-id", extract.system_id, "Rater id of the output")->capture_default_str();

  MetricsOptions metrics;
  bool metrics_no_trim = false;
  auto* c_metrics = app.add_subcommand("metrics", "Curve metrics of estimates against ground truth");
  c_metrics->add_option("--gt", metrics.gt, "Ground-truth annotations (file or directory)")
      ->required()
      ->check(CLI::ExistingPath);
  c_metrics->add_option("--est", metrics.est, "Estimate annotations (file or directory)")
      ->required()
      ->check(CLI::ExistingPath);
  c_metrics->add_option("--out", metrics.out, "Output directory")->required();
  c_metrics->add_option("--margin", metrics.margin_mm, "Safety margin in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_metrics->add_option("--step", metrics.step_mm, "Densification step in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_metrics->add_flag("--dice", metrics.dice, "Also report Dice of fixed-diameter tubes");
  c_metrics->add_option("--diameter", metrics.diameter_mm, "Tube diameter in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_metrics->add_option("--grid", metrics.grid, "Volume header whose grid hosts the Dice tubes")
      ->check(CLI::ExistingFile);
  c_metrics->add_flag("--no-trim", metrics_no_trim, "Compare full curves instead of trimming to the shorter");

  PairwiseOptions pairwise;
  bool pairwise_no_trim = false;
  auto* c_pairwise = app.add_subcommand("pairwise", "Pairwise observer matrix");
  c_pairwise->add_option("--annotations", pairwise.annotations, "Expert annotations")
      ->required()
      ->check(CLI::ExistingPath);
  c_pairwise->add_option("--system", pairwise.system, "System output annotations")->check(CLI::ExistingPath);
  c_pairwise->add_option("--metric", pairwise.metric, "mcd or margin")->capture_default_str()
      ->check(CLI::IsMember({"mcd", "margin"}));
  c_pairwise->add_option("--out", pairwise.out, "Output directory")->required();
  c_pairwise->add_option("--margin", pairwise.margin_mm, "Safety margin in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_pairwise->add_option("--step", pairwise.step_mm, "Densification step in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_pairwise->add_flag("--no-trim", pairwise_no_trim, "Do not trim canal groups to the shortest curve");

  ConsensusOptions consensus;
  bool consensus_no_trim = false;
  auto* c_consensus = app.add_subcommand("consensus", "Label-voting reference curves and observer comparison");
  c_consensus->add_option("--annotations", consensus.annotations, "Expert annotations")
      ->required()
      ->check(CLI::ExistingPath);
  c_consensus->add_option("--system", consensus.system, "System output compared against the reference")
      ->check(CLI::ExistingPath);
  c_consensus->add_option("--out", consensus.out, "Output directory")->required();
  c_consensus->add_option("--diameter", consensus.diameter_mm, "Rater tube diameter in mm")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_consensus->add_option("--spacing", consensus.spacing_mm, "Voting grid spacing in mm")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_consensus->add_option("--step", consensus.step_mm, "Densification step in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_consensus->add_flag("--no-trim", consensus_no_trim, "Do not trim canal groups to the shortest curve");
  c_consensus->add_flag("--save-masks", consensus.save_masks, "Write consensus masks under <out>/masks");

  VariabilityOptions variability;
  bool variability_no_trim = false;
  auto* c_variability = app.add_subcommand("variability", "Highest interobserver vs system variability");
  c_variability->add_option("--annotations", variability.annotations, "Expert annotations")
      ->required()
      ->check(CLI::ExistingPath);
  c_variability->add_option("--system", variability.system, "System output annotations")
      ->required()
      ->check(CLI::ExistingPath);
  c_variability->add_option("--out", variability.out, "Output directory")->required();
  c_variability->add_option("--wilcoxon", variability.wilcoxon, "exact, approx or auto")->capture_default_str()
      ->check(CLI::IsMember({"exact", "approx", "auto"}));
  c_variability->add_option("--step", variability.step_mm, "Densification step in mm")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_variability->add_flag("--no-trim", variability_no_trim, "Do not trim canal groups to the shortest curve");

  ProfileOptions profile;
  bool profile_no_trim = false;
  auto* c_profile = app.add_subcommand("profile", "Distance to the reference along the canal");
  c_profile->add_option("--annotations", profile.annotations, "Observer annotations")
      ->required()
      ->check(CLI::ExistingPath);
  c_profile->add_option("--ref", profile.ref, "Reference curves (e.g. consensus.json)")
      ->required()
      ->check(CLI::ExistingPath);
  c_profile->add_option("--system", profile.system, "System output annotations")->check(CLI::ExistingPath);
  c_profile->add_option("--points", profile.points, "Samples along each reference curve")->capture_default_str()
      ->check(CLI::Range(2, 100000));
  c_profile->add_option("--out", profile.out, "Output directory")->required();
  c_profile->add_option("--step", profile.step_mm, "Densification step in mm")->capture_default_str()->check(CLI::PositiveNumber);
  c_profile->add_flag("--no-trim", profile_no_trim, "Do not trim canal groups to the shortest curve");

  PhantomOptions phantom;
  auto* c_phantom = app.add_subcommand("phantom", "Generate synthetic scans, raters and probability volumes");
  c_phantom->add_option("--seed", phantom.seed, "Seed of the first scan")->capture_default_str();
  c_phantom->add_option("--scans", phantom.scans, "Number of scans (seeds seed..seed+n-1)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_phantom->add_option("--raters", phantom.raters, "Simulated raters")->capture_default_str()->check(CLI::Range(0, 1000));
  c_phantom->add_option("--sigma", phantom.sigma_mm, "Rater jitter sd in mm")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_phantom->add_option("--truncation", phantom.max_truncation_mm, "Maximum posterior truncation in mm")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  c_phantom->add_option("--blobs", phantom.blobs, "Noise blobs per volume")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_phantom->add_option("--diameter", phantom.diameter_mm, "Canal tube diameter in mm")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_phantom->add_option("--out", phantom.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::size_t workers = resolve_workers(workers_flag);
  std::string command;
  try {
    if (c_resample->parsed()) {
      command = "resample";
      run_resample(resample);
    } else if (c_extract->parsed()) {
      command = "extract";
      extract.midplane_x_mm = midplane;
      run_extract(extract);
    } else if (c_metrics->parsed()) {
      command = "metrics";
      metrics.trim = !metrics_no_trim;
      Flags flags{{"margin", format_double(metrics.margin_mm)},
                  {"step", format_double(metrics.step_mm)},
                  {"dice", flag(metrics.dice)},
                  {"diameter", format_double(metrics.diameter_mm)},
                  {"grid", metrics.grid},
                  {"trim", flag(metrics.trim)}};
      run_metrics(metrics, flags, workers);
    } else if (c_pairwise->parsed()) {
      command = "pairwise";
      pairwise.trim = !pairwise_no_trim;
      Flags flags{{"metric", pairwise.metric},
                  {"margin", format_double(pairwise.margin_mm)},
                  {"step", format_double(pairwise.step_mm)},
                  {"trim", flag(pairwise.trim)}};
      run_pairwise(pairwise, flags);
    } else if (c_consensus->parsed()) {
      command = "consensus";
      consensus.trim = !consensus_no_trim;
      Flags flags{{"diameter", format_double(consensus.diameter_mm)},
                  {"spacing", format_double(consensus.spacing_mm)},
                  {"step", format_double(consensus.step_mm)},
                  {"trim", flag(consensus.trim)},
                  {"tie_rule", "votes >= ceil(k/2) is canal"}};
      run_consensus(consensus, flags, workers);
    } else if (c_variability->parsed()) {
      command = "variability";
      variability.trim = !variability_no_trim;
      Flags flags{{"wilcoxon", variability.wilcoxon},
                  {"step", format_double(variability.step_mm)},
                  {"trim", flag(variability.trim)}};
      run_variability(variability, flags);
    } else if (c_profile->parsed()) {
      command = "profile";
      profile.trim = !profile_no_trim;
      Flags flags{{"points", std::to_string(profile.points)},
                  {"step", format_double(profile.step_mm)},
                  {"trim", flag(profile.trim)}};
      run_profile(profile, flags);
    } else if (c_phantom->parsed()) {
      command = "phantom";
      run_phantom(phantom, workers);
    }
  } catch (const canaleval::Error& e) {
    return report_failure(command, canaleval::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_failure(command, "internal", e.what());
  }
  return 0;
}
