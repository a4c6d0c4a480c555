#pragma once

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "strata_icer/dataset.hpp"
#include "strata_icer/error.hpp"
#include "strata_icer/icer.hpp"
#include "strata_icer/report_io.hpp"
#include "strata_icer/sim_io.hpp"
#include "strata_icer/simulate.hpp"

namespace strata_icer::cli {

namespace detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

inline int exit_code_for(errc c) {
  switch (c) {
    case errc::all_noise:
      return 2;  // clustering failure
    case errc::zero_effect_delta:
    case errc::no_valid_clusters:
    case errc::excluded_cluster:
    case errc::cluster_not_valid:
      return 3;  // estimation failure
    default:
      return 1;  // input / configuration failure
  }
}

struct AnalyzeOptions {
  std::string input;
  std::string metric = "euclidean";
  double eps = 0.0;
  int min_pts = 0;
  bool auto_params = false;
  bool scan = false;
  double scan_threshold = kDefaultScanThreshold;
  double ridge = kDefaultRidge;
  double eff_floor = kDefaultEffFloor;
  std::string weighting = "paper";
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 0;
  bool strict = false;
  std::string report_path;
  std::string clusters_csv;
  bool eps_set = false;
  bool min_pts_set = false;
};

inline Metric metric_from(const std::string& s) {
  const auto m = parse_metric(s);
  if (!m) fail(errc::bad_config, "unknown metric '" + s + "' (euclidean|mahalanobis)");
  return *m;
}

inline int cmd_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  const TrialDataset ds = load_dataset_file(opt.input);

  PipelineConfig cfg;
  cfg.metric = metric_from(opt.metric);
  cfg.auto_params = opt.auto_params;
  if (opt.eps_set) cfg.eps = opt.eps;
  if (opt.min_pts_set) cfg.min_pts = opt.min_pts;
  cfg.scan_enabled = opt.scan;
  cfg.scan_threshold = opt.scan_threshold;
  cfg.ridge = opt.ridge;
  cfg.eff_floor = opt.eff_floor;
  const auto weighting = parse_weighting(opt.weighting);
  if (!weighting) fail(errc::bad_config, "unknown weighting '" + opt.weighting + "' (paper|renormalized)");
  cfg.weighting = *weighting;
  cfg.bootstrap_replicates = opt.bootstrap;
  cfg.seed = opt.seed;
  cfg.strict = opt.strict;

  const StratifiedReport report = run_pipeline(ds, cfg);

  if (!opt.report_path.empty()) write_report_json_file(report, opt.report_path);
  if (!opt.clusters_csv.empty()) write_clusters_csv_file(report, opt.clusters_csv);

  out << "n=" << report.n << " m=" << ds.factor_count() << " clusters=" << report.cluster_count
      << " n_out=" << report.n_out << " (scan " << report.n_out_scan << ", noise " << report.n_out_noise
      << ")\n";
  out << "dbscan: metric=" << to_string(report.params.metric) << " eps=" << fmt(report.params.eps)
      << " min_pts=" << report.params.min_pts << (cfg.auto_params ? " (auto)" : "") << "\n";
  for (const auto& c : report.clusters) {
    out << "cluster " << c.cluster_id << ": n=" << c.size() << " (e " << c.n_experimental << "/c "
        << c.n_control << ") icer=" << fmt(*c.icer)
        << " var=" << (c.variance ? fmt(*c.variance) : std::string("unavailable"))
        << " weight=" << fmt(report.weights[static_cast<std::size_t>(c.cluster_id)]) << "\n";
  }
  for (const auto& c : report.excluded_clusters) {
    out << "excluded cluster " << c.cluster_id << ": n=" << c.size() << " status=" << to_string(c.status)
        << "\n";
  }
  out << "overall icer = " << fmt(report.overall_icer);
  if (report.overall_variance) {
    out << " +- " << fmt(std::sqrt(*report.overall_variance)) << " (variance "
        << fmt(*report.overall_variance) << ")";
  } else {
    out << " (variance unavailable)";
  }
  out << " [" << to_string(report.weighting_mode) << " weighting]\n";
  out << "naive icer = " << (report.naive_icer ? fmt(*report.naive_icer) : std::string("undefined"))
      << "\n";
  return 0;
}

struct ScanOptions {
  std::string input;
  std::string metric = "euclidean";
  double threshold = kDefaultScanThreshold;
  double ridge = kDefaultRidge;
};

inline int cmd_scan(const ScanOptions& opt, std::ostream& out) {
  const TrialDataset ds = load_dataset_file(opt.input);
  const Standardized std_result = standardize(factor_matrix(ds));
  const OutlierScan scan = centroid_scan(std_result.z, metric_from(opt.metric), opt.threshold, opt.ridge);

  std::vector<std::size_t> order(scan.distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scan.distances[a] > scan.distances[b]; });

  out << "centroid scan: metric=" << opt.metric << " threshold=" << fmt(opt.threshold)
      << " cutoff=" << fmt(scan.mean_distance + scan.threshold * scan.sd_distance) << " flagged="
      << scan.flagged_count() << "/" << scan.distances.size() << "\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%-20s %14s %8s", "id", "distance", "flagged");
  out << line << "\n";
  for (std::size_t i : order) {
    std::snprintf(line, sizeof(line), "%-20s %14.6f %8s", ds.records()[i].id.c_str(), scan.distances[i],
                  scan.flags[i] ? "yes" : "no");
    out << line << "\n";
  }
  return 0;
}

struct SuggestOptions {
  std::string input;
  std::string metric = "euclidean";
  double ridge = kDefaultRidge;
};

inline int cmd_suggest(const SuggestOptions& opt, std::ostream& out) {
  const TrialDataset ds = load_dataset_file(opt.input);
  const Standardized std_result = standardize(factor_matrix(ds));
  const Metric metric = metric_from(opt.metric);
  std::optional<CovarianceModel> cov;
  if (metric == Metric::mahalanobis) cov = fit_covariance(std_result.z, opt.ridge);
  const CovarianceModel* cov_ptr = cov ? &*cov : nullptr;

  const DbscanParams params = suggest_params(std_result.z, metric, cov_ptr);
  out << "suggested min_pts = " << params.min_pts << "\n";
  out << "suggested eps = " << fmt(params.eps) << " (90th percentile of the " << params.min_pts
      << "-distance profile)\n";
  out << "note: heuristic starting point; inspect the profile for an elbow before trusting it\n";
  out << "k-distance profile (ascending):\n";
  for (double d : k_distance_profile(std_result.z, params.min_pts, metric, cov_ptr)) {
    out << fmt(d) << "\n";
  }
  return 0;
}

struct SimulateOptions {
  std::string config;
  std::string output;
  std::string truth;
};

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  const SimConfig cfg = load_sim_config(opt.config);
  const auto [ds, truth] = simulate_trial(cfg);
  const std::string truth_path = opt.truth.empty() ? opt.output + ".truth.json" : opt.truth;
  write_csv_file(ds, opt.output);
  write_ground_truth_file(truth, truth_path);
  out << "wrote cohort: " << opt.output << " (n=" << ds.size() << ", m=" << ds.factor_count() << ")\n";
  out << "wrote truth: " << truth_path << "\n";
  for (std::size_t s = 0; s < cfg.strata.size(); ++s) {
    out << "stratum " << s << ": true icer = " << fmt(truth.stratum_icers[s]) << " (weight "
        << fmt(cfg.strata[s].weight) << ")\n";
  }
  out << "true overall icer = " << fmt(truth.overall_icer) << "\n";
  return 0;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Nonzero exits print exactly one line prefixed `error:` on
/// err; exit codes: 1 input/config, 2 clustering, 3 estimation.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"stratified cost-effectiveness analysis", "strata-icer"};
  app.require_subcommand(1);

  detail::AnalyzeOptions analyze_opt;
  CLI::App* analyze = app.add_subcommand("analyze", "cluster the cohort and estimate the overall ratio");
  analyze->add_option("--input", analyze_opt.input, "cohort CSV")->required();
  analyze->add_option("--metric", analyze_opt.metric, "euclidean|mahalanobis");
  CLI::Option* eps_opt = analyze->add_option("--eps", analyze_opt.eps, "dbscan neighborhood radius");
  CLI::Option* min_pts_opt =
      analyze->add_option("--min-pts", analyze_opt.min_pts, "dbscan minimum neighborhood size");
  CLI::Option* auto_opt =
      analyze->add_flag("--auto-params", analyze_opt.auto_params, "derive eps/min-pts heuristically");
  auto_opt->excludes(eps_opt)->excludes(min_pts_opt);
  analyze->add_flag("--scan", analyze_opt.scan, "centroid outlier pre-scan before clustering");
  analyze->add_option("--scan-threshold", analyze_opt.scan_threshold, "pre-scan cutoff in sd units");
  analyze->add_option("--ridge", analyze_opt.ridge, "covariance diagonal regularization");
  analyze->add_option("--eff-floor", analyze_opt.eff_floor, "smallest usable |effect delta|");
  analyze->add_option("--weighting", analyze_opt.weighting, "paper|renormalized");
  analyze->add_option("--bootstrap", analyze_opt.bootstrap, "bootstrap replicates per cluster");
  analyze->add_option("--seed", analyze_opt.seed, "rng seed")->envname("STRATA_ICER_SEED");
  analyze->add_flag("--strict", analyze_opt.strict, "treat excluded clusters as an error");
  analyze->add_option("--report", analyze_opt.report_path, "write the JSON report here");
  analyze->add_option("--clusters-csv", analyze_opt.clusters_csv, "write the per-cluster CSV here");

  detail::ScanOptions scan_opt;
  CLI::App* scan = app.add_subcommand("scan", "centroid distance table with outlier flags");
  scan->add_option("--input", scan_opt.input, "cohort CSV")->required();
  scan->add_option("--metric", scan_opt.metric, "euclidean|mahalanobis");
  scan->add_option("--scan-threshold", scan_opt.threshold, "cutoff in sd units");
  scan->add_option("--ridge", scan_opt.ridge, "covariance diagonal regularization");

  detail::SuggestOptions suggest_opt;
  CLI::App* suggest = app.add_subcommand("suggest", "heuristic dbscan parameters and k-distance profile");
  suggest->add_option("--input", suggest_opt.input, "cohort CSV")->required();
  suggest->add_option("--metric", suggest_opt.metric, "euclidean|mahalanobis");
  suggest->add_option("--ridge", suggest_opt.ridge, "covariance diagonal regularization");

  detail::SimulateOptions simulate_opt;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic cohort with known truth");
  simulate->add_option("--config", simulate_opt.config, "simulation config JSON")->required();
  simulate->add_option("--output", simulate_opt.output, "cohort CSV to write")->required();
  simulate->add_option("--truth", simulate_opt.truth, "truth JSON to write (default <output>.truth.json)");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    err << "error: " << e.get_name() << ": " << e.what() << "\n";
    return 1;
  }

  try {
    analyze_opt.eps_set = eps_opt->count() > 0;
    analyze_opt.min_pts_set = min_pts_opt->count() > 0;
    if (analyze->parsed()) return detail::cmd_analyze(analyze_opt, out);
    if (scan->parsed()) return detail::cmd_scan(scan_opt, out);
    if (suggest->parsed()) return detail::cmd_suggest(suggest_opt, out);
    if (simulate->parsed()) return detail::cmd_simulate(simulate_opt, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? static_cast<std::size_t>(argc - 1) : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args), out, err);
}

}  // namespace strata_icer::cli
