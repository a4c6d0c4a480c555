#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strata_icer/clustering.hpp"
#include "strata_icer/dataset.hpp"
#include "strata_icer/error.hpp"
#include "strata_icer/metrics.hpp"
#include "strata_icer/rng.hpp"
#include "strata_icer/stats.hpp"

namespace strata_icer {

/// Effect deltas at or below this magnitude are treated as zero: a ratio
/// estimator has to refuse the singularity instead of emitting +-1e15.
inline constexpr double kDefaultEffFloor = 1e-9;

inline constexpr std::size_t kMinBootstrapReplicates = 100;

enum class ClusterStatus { valid, one_arm_only, zero_effect_delta };

constexpr const char* to_string(ClusterStatus s) {
  switch (s) {
    case ClusterStatus::valid: return "valid";
    case ClusterStatus::one_arm_only: return "one_arm_only";
    case ClusterStatus::zero_effect_delta: return "zero_effect_delta";
  }
  return "unknown";
}

/// How cluster weights are formed for the overall ratio.
///   paper_literal: weight_j = n_j / n with n the full cohort including
///                  outliers, so weights sum below 1 whenever outliers exist.
///   renormalized:  weight_j = n_j / sum of valid cluster sizes, summing to 1.
enum class WeightingMode { paper_literal, renormalized };

constexpr const char* to_string(WeightingMode m) {
  return m == WeightingMode::paper_literal ? "paper" : "renormalized";
}

inline std::optional<WeightingMode> parse_weighting(std::string_view s) {
  if (s == "paper") return WeightingMode::paper_literal;
  if (s == "renormalized") return WeightingMode::renormalized;
  return std::nullopt;
}

/// Per-stratum statistics. Means are absent for an arm with no members;
/// icer is absent unless status == valid; variance is absent when the
/// bootstrap declared it unavailable (or was not run).
struct ClusterIcer {
  int cluster_id = 0;
  std::size_t n_experimental = 0;
  std::size_t n_control = 0;
  std::optional<double> mean_cost_experimental;
  std::optional<double> mean_cost_control;
  std::optional<double> mean_effect_experimental;
  std::optional<double> mean_effect_control;
  std::optional<double> delta_cost;
  std::optional<double> delta_effect;
  std::optional<double> icer;
  std::optional<double> variance;
  ClusterStatus status = ClusterStatus::one_arm_only;

  std::size_t size() const { return n_experimental + n_control; }
};

namespace detail {

struct ArmMoments {
  RunningStats cost_e, cost_c, eff_e, eff_c;

  void add(const PatientRecord& rec) {
    if (rec.arm == Arm::experimental) {
      cost_e.add(rec.cost);
      eff_e.add(rec.effect);
    } else {
      cost_c.add(rec.cost);
      eff_c.add(rec.effect);
    }
  }
};

}  // namespace detail

/// Whole-cohort ratio with no stratification: difference of mean costs over
/// difference of mean effects between the arms.
inline double naive_icer(const TrialDataset& ds, double eff_floor = kDefaultEffFloor) {
  detail::ArmMoments m;
  for (const auto& rec : ds.records()) m.add(rec);
  const double delta_eff = m.eff_e.mean() - m.eff_c.mean();
  if (!(std::fabs(delta_eff) > eff_floor)) {
    fail(errc::zero_effect_delta, "mean effect difference is below the effect floor");
  }
  return (m.cost_e.mean() - m.cost_c.mean()) / delta_eff;
}

/// Arm means and the ratio over the members of cluster j only. labels[i] is
/// record i's cluster id; negative labels mark outliers and never match.
inline ClusterIcer cluster_icer(const TrialDataset& ds, const std::vector<int>& labels, int j,
                                double eff_floor = kDefaultEffFloor) {
  if (labels.size() != ds.size()) fail(errc::mismatched_cohort, "labels do not match the dataset size");
  if (j < 0) fail(errc::unknown_cluster, "cluster ids are nonnegative, got " + std::to_string(j));

  ClusterIcer out;
  out.cluster_id = j;
  detail::ArmMoments m;
  bool seen = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != j) continue;
    seen = true;
    const auto& rec = ds.records()[i];
    m.add(rec);
    (rec.arm == Arm::experimental ? out.n_experimental : out.n_control) += 1;
  }
  if (!seen) fail(errc::unknown_cluster, "cluster " + std::to_string(j) + " has no members");

  if (out.n_experimental > 0) {
    out.mean_cost_experimental = m.cost_e.mean();
    out.mean_effect_experimental = m.eff_e.mean();
  }
  if (out.n_control > 0) {
    out.mean_cost_control = m.cost_c.mean();
    out.mean_effect_control = m.eff_c.mean();
  }
  if (out.n_experimental == 0 || out.n_control == 0) {
    out.status = ClusterStatus::one_arm_only;
    return out;
  }
  out.delta_cost = *out.mean_cost_experimental - *out.mean_cost_control;
  out.delta_effect = *out.mean_effect_experimental - *out.mean_effect_control;
  if (!(std::fabs(*out.delta_effect) > eff_floor)) {
    out.status = ClusterStatus::zero_effect_delta;
    return out;
  }
  out.status = ClusterStatus::valid;
  out.icer = *out.delta_cost / *out.delta_effect;
  return out;
}

inline ClusterIcer cluster_icer(const TrialDataset& ds, const ClusterAssignment& assignment, int j,
                                double eff_floor = kDefaultEffFloor) {
  return cluster_icer(ds, assignment.labels, j, eff_floor);
}

/// Within-arm stratified bootstrap of cluster j's ratio: each replicate
/// resamples the cluster's experimental and control members with replacement
/// (sizes preserved) and recomputes the ratio. Returns the sample variance of
/// the non-degenerate replicate ratios, or nullopt when more than 5% of
/// replicates had an effect delta at or below eff_floor -- the ratio's
/// distribution is then too unstable to summarize by a variance.
///
/// Replicate r draws from the substream (seed, j, r), so the result does not
/// depend on evaluation order.
inline std::optional<double> bootstrap_cluster_variance(const TrialDataset& ds,
                                                        const std::vector<int>& labels, int j,
                                                        std::size_t replicates, std::uint64_t seed,
                                                        double eff_floor = kDefaultEffFloor) {
  if (replicates < kMinBootstrapReplicates) {
    fail(errc::bad_config, "bootstrap needs at least " + std::to_string(kMinBootstrapReplicates) +
                               " replicates, got " + std::to_string(replicates));
  }
  const ClusterIcer point = cluster_icer(ds, labels, j, eff_floor);
  if (point.status != ClusterStatus::valid) {
    fail(errc::cluster_not_valid,
         "cluster " + std::to_string(j) + " is " + to_string(point.status) + ", cannot bootstrap");
  }

  std::vector<std::size_t> idx_e, idx_c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != j) continue;
    (ds.records()[i].arm == Arm::experimental ? idx_e : idx_c).push_back(i);
  }

  RunningStats replicate_icers;
  std::size_t degenerate = 0;
  for (std::size_t r = 0; r < replicates; ++r) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(j), r));
    RunningStats cost_e, eff_e, cost_c, eff_c;
    for (std::size_t t = 0; t < idx_e.size(); ++t) {
      const auto& rec = ds.records()[idx_e[rng.below(idx_e.size())]];
      cost_e.add(rec.cost);
      eff_e.add(rec.effect);
    }
    for (std::size_t t = 0; t < idx_c.size(); ++t) {
      const auto& rec = ds.records()[idx_c[rng.below(idx_c.size())]];
      cost_c.add(rec.cost);
      eff_c.add(rec.effect);
    }
    const double delta_eff = eff_e.mean() - eff_c.mean();
    if (!(std::fabs(delta_eff) > eff_floor)) {
      ++degenerate;
      continue;
    }
    replicate_icers.add((cost_e.mean() - cost_c.mean()) / delta_eff);
  }

  if (degenerate * 20 > replicates) return std::nullopt;  // more than 5% degenerate
  if (replicate_icers.count() < 2) return std::nullopt;
  return replicate_icers.sample_variance();
}

inline std::optional<double> bootstrap_cluster_variance(const TrialDataset& ds,
                                                        const ClusterAssignment& assignment, int j,
                                                        std::size_t replicates, std::uint64_t seed,
                                                        double eff_floor = kDefaultEffFloor) {
  return bootstrap_cluster_variance(ds, assignment.labels, j, replicates, seed, eff_floor);
}

struct OverallResult {
  double icer = 0.0;
  std::vector<double> weights;  // aligned with the input clusters; 0 for non-valid entries
};

/// Weighted average of the valid cluster ratios. n_total and n_out must
/// satisfy the accounting identity sum(n_j) + n_out = n_total over the given
/// clusters (excluded clusters' members still count inside the sum).
inline OverallResult overall_icer(const std::vector<ClusterIcer>& clusters, std::size_t n_total,
                                  std::size_t n_out, WeightingMode mode) {
  std::size_t member_sum = 0;
  std::size_t valid_member_sum = 0;
  bool any_valid = false;
  for (const auto& c : clusters) {
    member_sum += c.size();
    if (c.status == ClusterStatus::valid) {
      valid_member_sum += c.size();
      any_valid = true;
    }
  }
  if (!any_valid) fail(errc::no_valid_clusters, "no cluster has both arms and a usable effect delta");
  if (member_sum + n_out != n_total) {
    fail(errc::bad_config, "cluster sizes plus outliers (" + std::to_string(member_sum + n_out) +
                               ") do not account for the cohort (" + std::to_string(n_total) + ")");
  }

  OverallResult out;
  out.weights.assign(clusters.size(), 0.0);
  const double denom = mode == WeightingMode::paper_literal ? static_cast<double>(n_total)
                                                            : static_cast<double>(valid_member_sum);
  double acc = 0.0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    if (c.status != ClusterStatus::valid) continue;
    const double w = static_cast<double>(c.size()) / denom;
    out.weights[i] = w;
    acc += w * *c.icer;
  }
  out.icer = acc;
  return out;
}

/// Variance propagation: sum of weight^2 * var over valid clusters.
/// Unavailable as soon as any contributing cluster variance is unavailable;
/// silent zero-filling would corrupt any interval built downstream.
inline std::optional<double> icer_variance(const std::vector<ClusterIcer>& clusters,
                                           const std::vector<double>& weights) {
  if (clusters.size() != weights.size()) {
    fail(errc::bad_config, "weights are not aligned with the cluster list");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].status != ClusterStatus::valid) continue;
    if (!clusters[i].variance) return std::nullopt;
    acc += weights[i] * weights[i] * *clusters[i].variance;
  }
  return acc;
}

/// Label given in reports to rows removed by the centroid pre-scan
/// (distinct from kNoiseLabel so the two discard stages stay visible).
inline constexpr int kScanRemovedLabel = -2;

struct PipelineConfig {
  Metric metric = Metric::euclidean;
  bool auto_params = false;           // derive eps/min_pts via suggest_params
  std::optional<double> eps;
  std::optional<int> min_pts;
  bool scan_enabled = false;          // centroid pre-scan before clustering
  double scan_threshold = kDefaultScanThreshold;
  double ridge = kDefaultRidge;
  double eff_floor = kDefaultEffFloor;
  WeightingMode weighting = WeightingMode::paper_literal;
  std::size_t bootstrap_replicates = 1000;
  std::uint64_t seed = 0;
  bool strict = false;                // excluded clusters become an error
};

struct StratifiedReport {
  double overall_icer = 0.0;
  std::optional<double> overall_variance;
  int cluster_count = 0;  // clusters found, valid and excluded together
  std::size_t n = 0;
  std::size_t n_out = 0;
  std::size_t n_out_scan = 0;
  std::size_t n_out_noise = 0;
  std::vector<double> weights;               // indexed by cluster id; 0 for excluded clusters
  std::vector<ClusterIcer> clusters;         // valid, ascending id
  std::vector<ClusterIcer> excluded_clusters;
  WeightingMode weighting_mode = WeightingMode::paper_literal;
  std::optional<double> naive_icer;          // absent if the whole-cohort delta is degenerate
  std::vector<int> labels;  // per input row: cluster id, kNoiseLabel, or kScanRemovedLabel
  DbscanParams params;      // effective clustering parameters
  PipelineConfig config;
};

/// Full analysis: standardize, optional centroid scan, density clustering,
/// per-cluster ratios with bootstrap variances, weighted overall ratio with
/// propagated variance. The unstratified ratio is carried along for contrast.
inline StratifiedReport run_pipeline(const TrialDataset& ds, const PipelineConfig& cfg) {
  if (!cfg.auto_params) {
    if (!cfg.eps || !cfg.min_pts) fail(errc::bad_config, "provide eps and min_pts, or enable auto params");
  }
  if (!(cfg.eff_floor > 0.0)) fail(errc::bad_config, "effect floor must be positive");
  if (cfg.ridge < 0.0) fail(errc::bad_config, "ridge must be nonnegative");

  StratifiedReport report;
  report.config = cfg;
  report.weighting_mode = cfg.weighting;
  report.n = ds.size();

  const Eigen::MatrixXd X = factor_matrix(ds);
  const Standardized std_result = standardize(X);
  const Eigen::MatrixXd& Z = std_result.z;

  // Optional pre-scan on the standardized factors; flagged rows are discarded
  // before clustering and counted as outliers.
  std::vector<std::size_t> kept;
  kept.reserve(ds.size());
  if (cfg.scan_enabled) {
    const OutlierScan scan = centroid_scan(Z, cfg.metric, cfg.scan_threshold, cfg.ridge);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!scan.flags[i]) kept.push_back(i);
    }
    report.n_out_scan = ds.size() - kept.size();
  } else {
    for (std::size_t i = 0; i < ds.size(); ++i) kept.push_back(i);
  }

  Eigen::MatrixXd Zk(static_cast<Eigen::Index>(kept.size()), Z.cols());
  for (std::size_t r = 0; r < kept.size(); ++r) Zk.row(static_cast<Eigen::Index>(r)) = Z.row(static_cast<Eigen::Index>(kept[r]));

  // One global covariance context for the Mahalanobis metric, fit on the rows
  // that are actually clustered.
  std::optional<CovarianceModel> cov;
  if (cfg.metric == Metric::mahalanobis) cov = fit_covariance(Zk, cfg.ridge);
  const CovarianceModel* cov_ptr = cov ? &*cov : nullptr;

  DbscanParams params;
  if (cfg.auto_params) {
    params = suggest_params(Zk, cfg.metric, cov_ptr);
  } else {
    params.eps = *cfg.eps;
    params.min_pts = *cfg.min_pts;
    params.metric = cfg.metric;
  }
  report.params = params;

  const ClusterAssignment assignment = dbscan(Zk, params, cov_ptr);
  if (assignment.cluster_count == 0) {
    fail(errc::all_noise, "every point was labeled noise; raise eps or lower min_pts");
  }
  report.cluster_count = assignment.cluster_count;
  report.n_out_noise = assignment.noise_count();
  report.n_out = report.n_out_scan + report.n_out_noise;

  report.labels.assign(ds.size(), kScanRemovedLabel);
  for (std::size_t r = 0; r < kept.size(); ++r) report.labels[kept[r]] = assignment.labels[r];

  std::vector<ClusterIcer> all_clusters;
  all_clusters.reserve(static_cast<std::size_t>(assignment.cluster_count));
  for (int j = 0; j < assignment.cluster_count; ++j) {
    ClusterIcer ci = cluster_icer(ds, report.labels, j, cfg.eff_floor);
    if (ci.status == ClusterStatus::valid) {
      ci.variance =
          bootstrap_cluster_variance(ds, report.labels, j, cfg.bootstrap_replicates, cfg.seed, cfg.eff_floor);
    } else if (cfg.strict) {
      fail(errc::excluded_cluster,
           "cluster " + std::to_string(j) + " is " + to_string(ci.status) + " and strict mode is on");
    }
    all_clusters.push_back(std::move(ci));
  }

  const OverallResult overall = overall_icer(all_clusters, report.n, report.n_out, cfg.weighting);
  report.overall_icer = overall.icer;
  report.weights = overall.weights;
  report.overall_variance = icer_variance(all_clusters, overall.weights);

  for (auto& ci : all_clusters) {
    (ci.status == ClusterStatus::valid ? report.clusters : report.excluded_clusters).push_back(std::move(ci));
  }

  try {
    report.naive_icer = naive_icer(ds, cfg.eff_floor);
  } catch (const Error& e) {
    if (e.code() != errc::zero_effect_delta) throw;
  }

  return report;
}

}  // namespace strata_icer
