// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "canaleval/analysis.hpp"
#include "canaleval/consensus.hpp"
#include "canaleval/error.hpp"
#include "canaleval/io.hpp"
#include "canaleval/metrics.hpp"
#include "canaleval/phantom.hpp"
#include "canaleval/skeleton.hpp"
#include "support/cli.hpp"
#include "support/oracles.hpp"

namespace {

using namespace canaleval;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

char buf_[512];
template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf_, sizeof buf_, f, a...);
  return buf_;
}

// 1. Metric axioms on seeded random curve pairs.
Outcome metric_axioms() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240101);
  double worst_rigid = 0.0, worst_scan = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Curve a = oracle::random_curve(rng, 20 + trial % 60);
    const Curve b = oracle::random_curve(rng, 20 + (trial * 7) % 60);
    out.require(smcd(a, b) == smcd(b, a), fmt("smcd asymmetric in trial %d", trial));
    out.require(mcd(a, a) == 0.0 && mcd(b, b) == 0.0, fmt("mcd(T,T) != 0 in trial %d", trial));
    const oracle::Rigid m = oracle::random_rigid(rng);
    worst_rigid = std::max({worst_rigid, std::abs(mcd(m.apply(a), m.apply(b)) - mcd(a, b)),
                            std::abs(smcd(m.apply(a), m.apply(b)) - smcd(a, b))});
    worst_scan = std::max({worst_scan, std::abs(mcd(a, b) - oracle::mean_nearest(a.points, b.points)),
                           std::abs(mcd(b, a) - oracle::mean_nearest(b.points, a.points))});
  }
  const double t = seconds_since(t0);
  out.require(worst_rigid <= 1e-9, fmt("rigid deviation %.3g mm", worst_rigid));
  out.require(worst_scan <= 1e-12, fmt("index vs scan deviation %.3g mm", worst_scan));
  out.require(t < 30.0, fmt("runtime %.1f s", t));
  if (out.pass) out.detail = fmt("1000 pairs, rigid dev %.2g, scan dev %.2g, %.1f s", worst_rigid, worst_scan, t);
  return out;
}

// 2. Three-point asymmetry witness.
Outcome asymmetry_witness() {
  Outcome out;
  const Curve t = oracle::polyline({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  Curve e;
  e.points = {{0, 0, 0}};
  const double te = mcd(t, e), et = mcd(e, t), s = smcd(t, e);
  out.require(te == 1.0 && et == 0.0 && s == 0.5, fmt("mcd(T,E)=%g mcd(E,T)=%g smcd=%g", te, et, s));
  if (out.pass) out.detail = "mcd(T,E)=1 mcd(E,T)=0 smcd=0.5";
  return out;
}

// 3. Thinning invariants and the straight tube.
Outcome thinning_invariants() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const Mask m = oracle::random_blobs(rng);
    const Mask s = thin(m);
    out.require(thin(s) == s, fmt("not idempotent on blob %d", trial));
    out.require(oracle::flood_fill(s).size() == oracle::flood_fill(m).size(),
                fmt("component count changed on blob %d", trial));
  }
  GridGeometry g;
  g.dims = {70, 25, 25};
  g.spacing_mm = {0.4, 0.4, 0.4};
  const Curve axis = oracle::polyline({{2.0, 4.8, 4.8}, {25.2, 4.8, 4.8}});
  const SkeletonGraph graph = build_graph(thin(rasterize_tube(axis, g, 3.0).mask));
  const auto paths = extract_paths(graph);
  out.require(graph_components(graph).size() == 1 && graph.endpoints.size() == 2 && graph.junctions.empty() &&
                  paths.size() == 1,
              "tube skeleton is not a single path");
  const double d = paths.empty() ? 1e9 : smcd(densified(paths.front().curve), densified(axis));
  out.require(d <= 0.6, fmt("tube path SMCD %.3f mm", d));
  const double t = seconds_since(t0);
  out.require(t < 60.0, fmt("runtime %.1f s", t));
  if (out.pass) out.detail = fmt("200 blobs, tube SMCD %.3f mm, %.1f s", d, t);
  return out;
}

// 4. Voting rules.
Outcome voting() {
  Outcome out;
  GridGeometry one;
  one.dims = {1, 1, 1};
  auto vote = [&](std::vector<int> labels) {
    std::vector<Mask> masks;
    for (int l : labels) masks.emplace_back(one, static_cast<std::uint8_t>(l));
    return label_vote(masks).consensus[0];
  };
  out.require(vote({1, 1, 0, 0}) == 1, "[C,C,B,B] is not canal");
  out.require(vote({1, 0, 0, 0}) == 0, "[C,B,B,B] is not background");
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  GridGeometry g;
  g.dims = {8, 7, 6};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Mask> masks;
    for (int r = 0; r < 2 + trial % 6; ++r) {
      Mask m(g, 0);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = coin(rng);
      masks.push_back(std::move(m));
    }
    const Mask base = label_vote(masks).consensus;
    std::shuffle(masks.begin(), masks.end(), rng);
    out.require(label_vote(masks).consensus == base, fmt("permutation changed grid %d", trial));
    masks.emplace_back(g, 1);
    const Mask more = label_vote(masks).consensus;
    for (std::size_t i = 0; i < base.size(); ++i)
      if (base[i] && !more[i]) out.require(false, fmt("all-canal rater removed a voxel in grid %d", trial));
  }
  if (out.pass) out.detail = "tie and majority rules, 100 grids";
  return out;
}

double trimmed_smcd(const Curve& truth, const Curve& c) {
  const auto t = trim_to_shortest(std::vector<Curve>{truth, c});
  return smcd(densified(t[0]), densified(t[1]));
}

std::pair<std::string, std::string> unordered(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

// 5. End-to-end phantom trials.
std::vector<Outcome> phantom_trials() {
  Outcome a, b, c;
  const auto t0 = std::chrono::steady_clock::now();
  int recovered = 0, explicit_failures = 0, consensus_ok = 0;
  double worst_extraction = 0.0;
  std::vector<AnnotationDocument> docs;
  std::vector<std::string> experts;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    PhantomSpec spec;
    spec.seed = seed;
    spec.raters = 4;
    spec.sigma_mm = 0.3;
    const CanalPair truth = generate_ground_truth(spec);
    const auto raters = simulate_raters(truth, spec);
    docs.insert(docs.end(), raters.begin(), raters.end());
    if (experts.empty())
      for (int r = 0; r < spec.raters; ++r) experts.push_back(phantom_rater_id(r));

    try {
      const CanalPair est = extract_canals(render_probability_volume(truth, spec));
      const double l = trimmed_smcd(truth.left, est.left), r = trimmed_smcd(truth.right, est.right);
      worst_extraction = std::max({worst_extraction, l, r});
      if (l <= 1.0 && r <= 1.0) ++recovered;
      AnnotationDocument sys;
      sys.scan_id = phantom_scan_id(seed);
      sys.rater_id = "system";
      sys.device = kPhantomDevice;
      sys.canals = {polyline_entry(est.left), polyline_entry(est.right)};
      docs.push_back(sys);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::extraction_failure) ++explicit_failures;
    }

    const auto sets = group_by_scan(raters, 0.1);
    const ScanConsensus sc = scan_consensus(sets.front(), experts);
    bool ok = true;
    for (Side side : {Side::left, Side::right}) {
      const Curve& axis = side == Side::left ? truth.left : truth.right;
      double worst_rater = 0.0;
      for (const auto& id : experts) worst_rater = std::max(worst_rater, trimmed_smcd(axis, *sets.front().find(id, side)));
      const Curve* cons = nullptr;
      for (const Curve& cc : sc.curves.curves)
        if (cc.side == side) cons = &cc;
      ok = ok && cons != nullptr && trimmed_smcd(axis, *cons) <= worst_rater;
    }
    consensus_ok += ok;
  }
  a.require(recovered >= 95, fmt("recovered %d/100", recovered));
  a.require(recovered + explicit_failures == 100,
            fmt("%d trials missed without an extraction failure", 100 - recovered - explicit_failures));
  a.detail = a.pass ? fmt("recovered %d/100, explicit failures %d, worst SMCD %.3f mm", recovered, explicit_failures,
                          worst_extraction)
                    : a.detail;
  b.require(consensus_ok >= 90, fmt("consensus within rater spread in %d/100", consensus_ok));
  if (b.pass) b.detail = fmt("consensus within rater spread in %d/100", consensus_ok);

  // Selections against brute-force enumeration over the same prepared groups.
  const auto study = group_by_scan(docs, 0.1);
  const auto records = highest_variability(study, experts, "system");
  std::vector<std::string> all = experts;
  all.push_back("system");
  const auto groups = canal_groups(study, all, AnalysisOptions{});
  c.require(groups.size() == records.size() && records.size() == 200, fmt("%zu records", records.size()));
  std::size_t matched = 0;
  for (std::size_t k = 0; k < std::min(groups.size(), records.size()); ++k) {
    const auto& curves = groups[k].curves;
    double best = -1.0;
    std::set<std::pair<std::string, std::string>> best_pairs;
    for (const auto& x : experts)
      for (const auto& y : experts) {
        if (x == y) continue;
        const double d = oracle::mean_nearest(curves.at(x).points, curves.at(y).points);
        if (d > best) {
          best = d;
          best_pairs = {unordered(x, y)};
        } else if (d == best) {
          best_pairs.insert(unordered(x, y));
        }
      }
    bool ok = best_pairs.count(unordered(records[k].iv_first, records[k].iv_second)) > 0;
    if (curves.count("system")) {
      double worst = -1.0;
      std::set<std::string> worst_experts;
      for (const auto& x : experts) {
        const double d = oracle::mean_nearest(curves.at(x).points, curves.at("system").points);
        if (d > worst) {
          worst = d;
          worst_experts = {x};
        } else if (d == worst) {
          worst_experts.insert(x);
        }
      }
      ok = ok && worst_experts.count(records[k].dv_expert) > 0;
    } else {
      ok = ok && records[k].system_failure;
    }
    matched += ok;
  }
  c.require(matched == records.size(), fmt("%zu/%zu canals match", matched, records.size()));
  const double t = seconds_since(t0);
  for (Outcome* o : {&a, &b, &c}) o->require(t < 300.0, fmt("runtime %.1f s", t));
  if (c.pass) c.detail = fmt("%zu/%zu canals match, total %.1f s", matched, records.size(), t);
  return {a, b, c};
}

// 6. Signed-rank test.
Outcome wilcoxon() {
  Outcome out;
  const std::vector<double> d{0.3, 0.1, 0.6, 0.2, 0.5, 0.4}, zero(6, 0.0);
  const double p6 = wilcoxon_signed_rank(d, zero, WilcoxonMode::exact).p_two_sided;
  const double enumerated = oracle::signed_rank_enumeration_p({1, 2, 3, 4, 5, 6}, 21.0);
  out.require(p6 == 0.03125 && enumerated == 0.03125, fmt("n=6 p=%.6g enumeration %.6g", p6, enumerated));
  std::mt19937_64 rng(25);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(25), y(25);
    const double shift = 0.1 * (trial % 8);
    for (std::size_t i = 0; i < 25; ++i) {
      x[i] = g(rng) + shift;
      y[i] = g(rng);
    }
    worst = std::max(worst, std::abs(wilcoxon_signed_rank(x, y, WilcoxonMode::exact).p_two_sided -
                                     wilcoxon_signed_rank(x, y, WilcoxonMode::approx).p_two_sided));
  }
  out.require(worst <= 0.02, fmt("exact vs approx |dp| = %.4f", worst));
  if (out.pass) out.detail = fmt("n=6 p=0.03125, max |dp| at n=25 = %.4f", worst);
  return out;
}

AnnotationDocument polyline_doc(const std::string& scan, const std::string& rater, double dx) {
  AnnotationDocument doc;
  doc.scan_id = scan;
  doc.rater_id = rater;
  doc.device = "test";
  for (Side side : {Side::left, Side::right}) {
    const double x = (side == Side::left ? 60.0 : 20.0) + dx;
    doc.canals.push_back(polyline_entry(oracle::polyline({{x, 5, 10}, {x, 25, 10}, {x, 45, 10}}, side)));
  }
  return doc;
}

// 7. Profile contract.
Outcome profile_contract() {
  Outcome out;
  const auto dir = clitest::scratch("accept_profile");
  save_annotations(dir / "ref.json", std::vector{polyline_doc("s1", "consensus", 0.0)});
  save_annotations(dir / "obs.json", std::vector{polyline_doc("s1", "offset", 1.0)});
  out.require(clitest::run(dir, "profile --annotations obs.json --ref ref.json --points 200 --out prof") == 0,
              "profile command failed");
  const std::string csv = clitest::slurp(dir / "prof" / "profile.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  // Samples fall at most half a step (0.1 mm) along the axis from a vertex,
  // plus the 6-decimal rounding of the table.
  const double tol = std::sqrt(1.0 + 0.01) - 1.0 + 1e-6;
  double worst = 0.0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string cell;
    int col = 0, values = 0;
    while (std::getline(ls, cell, ','))
      if (col++ >= 3) {
        ++values;
        worst = std::max(worst, std::abs(std::strtod(cell.c_str(), nullptr) - 1.0));
      }
    out.require(values == 200, fmt("row with %d values", values));
  }
  out.require(rows == 2, fmt("%d profile rows", rows));
  out.require(worst <= tol, fmt("offset profile deviates by %.4g mm", worst));

  std::mt19937_64 rng(7);
  double worst_mean = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Curve t = oracle::random_curve(rng, 60), r = densified(oracle::random_curve(rng, 60));
    const auto prof = position_profile(t, r, 200);
    double mean = 0.0;
    for (double v : prof) mean += v;
    mean /= 200.0;
    worst_mean = std::max(worst_mean, std::abs(mean - mcd(resample_uniform(t, 200), r)));
  }
  out.require(worst_mean <= 1e-12, fmt("profile mean deviates from MCD by %.3g", worst_mean));
  if (out.pass) out.detail = fmt("200 values per row, offset dev %.4f mm, mean identity %.2g", worst, worst_mean);
  std::filesystem::remove_all(dir);
  return out;
}

// 8. Reproducibility.
Outcome reproducibility() {
  Outcome out;
  const auto dir = clitest::scratch("accept_repro");
  const std::vector<std::string> commands{
      "phantom --seed 11 --scans 2 --out ph{}",
      "extract --prob ph1/volumes/phantom-11.cvh --device phantom --out sys{}/phantom-11.json",
      "extract --prob ph1/volumes/phantom-12.cvh --device phantom --out sys{}/phantom-12.json",
      "metrics --gt ph1/truth --est sys1 --dice --grid ph1/volumes/phantom-11.cvh --out metrics{}",
      "pairwise --annotations ph1/annotations --system sys1 --out pairwise{}",
      "consensus --annotations ph1/annotations --system sys1 --save-masks --out consensus{}",
      "variability --annotations ph1/annotations --system sys1 --out variability{}",
      "profile --annotations ph1/annotations --system sys1 --ref consensus1/consensus.json --out profile{}",
      "resample --in ph1/volumes/phantom-11.cvh --spacing 0.6 --out resampled{}/v.cvh",
  };
  int compared = 0;
  for (const std::string& c : commands) {
    const std::string name = c.substr(c.rfind(' ') + 1);
    std::string first = c, second = c;
    first.replace(first.find("{}"), 2, "1");
    second.replace(second.find("{}"), 2, "2");
    const std::string outdir = name.substr(0, name.find("{}"));
    out.require(clitest::run(dir, first) == 0, "failed: " + first);
    out.require(clitest::run(dir, second) == 0, "failed: " + second);
    const auto a = clitest::tree(dir / (outdir + "1")), b = clitest::tree(dir / (outdir + "2"));
    out.require(!a.empty() && a == b, "outputs differ: " + c);
    ++compared;
  }

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  int round_trips = 0;
  for (int trial = 0; trial < 200; ++trial) {
    AnnotationDocument d;
    d.scan_id = "scan" + std::to_string(trial);
    d.rater_id = "rater" + std::to_string(trial % 3);
    d.device = trial % 2 ? "a" : "b";
    if (trial % 5 == 0) d.conditions = {"metal_artifact"};
    for (Side side : {Side::left, Side::right}) {
      if (trial % 7 == 0 && side == Side::right) continue;
      CanalAnnotation c;
      c.side = side;
      c.kind = trial % 2 ? PointKind::polyline : PointKind::control_points;
      c.clarity = trial % 3 ? Clarity::clear : Clarity::unclear;
      c.orientation = trial % 4 ? Orientation::anterior_first : Orientation::posterior_first;
      for (int k = 0; k < 2 + trial % 9; ++k) c.points_mm.push_back({u(rng), u(rng), u(rng)});
      d.canals.push_back(c);
    }
    const std::string text = format_annotation(d);
    const auto back = parse_annotations(text);
    const bool ok = back.documents.size() == 1 && back.documents[0] == d && format_annotation(back.documents[0]) == text;
    out.require(ok, fmt("annotation round trip failed in trial %d", trial));
    round_trips += ok;
  }
  if (out.pass) out.detail = fmt("%d commands byte-identical, %d annotation round trips", compared, round_trips);
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace

int main() {
  struct Entry {
    const char* id;
    const char* name;
    std::function<std::vector<Outcome>()> run;
  };
  const std::vector<Entry> entries{
      {"1", "metric axioms", [] { return std::vector{metric_axioms()}; }},
      {"2", "asymmetry witness", [] { return std::vector{asymmetry_witness()}; }},
      {"3", "thinning", [] { return std::vector{thinning_invariants()}; }},
      {"4", "voting rules", [] { return std::vector{voting()}; }},
      {"5", "phantom trials", phantom_trials},
      {"6", "signed-rank test", [] { return std::vector{wilcoxon()}; }},
      {"7", "profile contract", [] { return std::vector{profile_contract()}; }},
      {"8", "reproducibility", [] { return std::vector{reproducibility()}; }},
  };
  int failed = 0;
  for (const Entry& e : entries) {
    std::vector<Outcome> outcomes;
    try {
      outcomes = e.run();
    } catch (const std::exception& ex) {
      outcomes = {Outcome{false, std::string("exception: ") + ex.what()}};
    }
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      std::string label = e.id;
      if (outcomes.size() > 1) label += static_cast<char>('a' + k);
      label += std::string(" ") + e.name;
      std::printf("%s criterion %s: %s\n", outcomes[k].pass ? "PASS" : "FAIL", label.c_str(),
                  outcomes[k].detail.c_str());
      std::fflush(stdout);
      failed += !outcomes[k].pass;
    }
  }
  return failed == 0 ? 0 : 1;
}
