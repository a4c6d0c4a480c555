#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strata_icer/dataset.hpp"
#include "strata_icer/error.hpp"
#include "strata_icer/icer.hpp"
#include "strata_icer/rng.hpp"

namespace strata_icer {

/// One planted stratum. arm_balance is the probability that a member receives
/// the experimental treatment; making it differ across strata plants
/// confounding by indication. Zero spreads/sds are allowed and produce
/// degenerate (noiseless) strata.
struct StratumSpec {
  double weight = 0.0;
  std::vector<double> factor_center;
  std::vector<double> factor_spread;
  double cost_mean_experimental = 0.0;
  double cost_mean_control = 0.0;
  double cost_sd = 0.0;
  double effect_mean_experimental = 0.0;
  double effect_mean_control = 0.0;
  double effect_sd = 0.0;
  double arm_balance = 0.5;

  double true_icer() const {
    return (cost_mean_experimental - cost_mean_control) /
           (effect_mean_experimental - effect_mean_control);
  }
};

struct SimConfig {
  std::vector<StratumSpec> strata;
  std::size_t n = 0;
  double outlier_rate = 0.0;   // fraction of the cohort replaced by far-away points
  double outlier_scale = 10.0; // in units of the largest factor spread
  std::uint64_t seed = 0;
};

/// What the generator knows and the estimator has to recover.
struct GroundTruth {
  std::vector<int> stratum;           // per patient; -1 marks an injected outlier
  std::vector<double> stratum_icers;  // population ratios per stratum
  double overall_icer = 0.0;          // weight-averaged population ratio
};

namespace detail {

inline void validate_sim_config(const SimConfig& cfg) {
  if (cfg.strata.empty()) fail(errc::bad_config, "at least one stratum is required");
  if (cfg.n < 10) fail(errc::bad_config, "cohort size must be at least 10");
  if (!(cfg.outlier_rate >= 0.0 && cfg.outlier_rate < 0.2)) {
    fail(errc::bad_config, "outlier rate must be in [0, 0.2)");
  }
  if (!(cfg.outlier_scale > 0.0)) fail(errc::bad_config, "outlier scale must be positive");
  const std::size_t m = cfg.strata.front().factor_center.size();
  if (m == 0) fail(errc::bad_config, "strata need at least one factor dimension");
  double weight_sum = 0.0;
  for (std::size_t s = 0; s < cfg.strata.size(); ++s) {
    const auto& st = cfg.strata[s];
    const std::string tag = "stratum " + std::to_string(s);
    if (!(st.weight > 0.0 && st.weight <= 1.0)) fail(errc::bad_config, tag + ": weight must be in (0,1]");
    weight_sum += st.weight;
    if (st.factor_center.size() != m || st.factor_spread.size() != m) {
      fail(errc::bad_config, tag + ": factor center/spread dimensions disagree across strata");
    }
    for (double sp : st.factor_spread) {
      if (sp < 0.0) fail(errc::bad_config, tag + ": factor spread must be nonnegative");
    }
    if (st.cost_sd < 0.0 || st.effect_sd < 0.0) fail(errc::bad_config, tag + ": sd must be nonnegative");
    if (!(st.arm_balance > 0.0 && st.arm_balance < 1.0)) {
      fail(errc::bad_config, tag + ": arm balance must be strictly between 0 and 1");
    }
    if (std::fabs(st.effect_mean_experimental - st.effect_mean_control) <= kDefaultEffFloor) {
      fail(errc::degenerate_stratum, tag + ": true effect delta is below the effect floor");
    }
  }
  if (std::fabs(weight_sum - 1.0) > 1e-9) {
    fail(errc::bad_config, "stratum weights sum to " + std::to_string(weight_sum) + ", expected 1");
  }
}

inline std::string padded_id(const char* prefix, std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
  return std::string(buf);
}

}  // namespace detail

/// Draws a synthetic cohort: stratum by weight, arm by the stratum's
/// arm_balance, spherical factor noise around the stratum center, and
/// arm-specific cost/effect distributions. ceil(outlier_rate * n) far-away
/// factor outliers are appended after the stratum patients (ids prefixed
/// "out"); their distance from every stratum center is at least
/// outlier_scale times the largest factor spread. Deterministic per seed.
inline std::pair<TrialDataset, GroundTruth> simulate_trial(const SimConfig& cfg) {
  detail::validate_sim_config(cfg);
  const std::size_t m = cfg.strata.front().factor_center.size();
  const std::size_t n_outliers = static_cast<std::size_t>(
      std::ceil(cfg.outlier_rate * static_cast<double>(cfg.n)));
  const std::size_t n_members = cfg.n - n_outliers;

  std::vector<double> cum_weight(cfg.strata.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < cfg.strata.size(); ++s) {
    acc += cfg.strata[s].weight;
    cum_weight[s] = acc;
  }
  cum_weight.back() = 1.0;

  double max_center_norm = 0.0;
  double max_spread = 0.0;
  for (const auto& st : cfg.strata) {
    double norm2 = 0.0;
    for (double c : st.factor_center) norm2 += c * c;
    max_center_norm = std::max(max_center_norm, std::sqrt(norm2));
    for (double sp : st.factor_spread) max_spread = std::max(max_spread, sp);
  }
  const double outlier_radius = max_center_norm + cfg.outlier_scale * (max_spread > 0.0 ? max_spread : 1.0);

  Rng rng(cfg.seed);
  std::vector<PatientRecord> records;
  records.reserve(cfg.n);
  GroundTruth truth;
  truth.stratum.reserve(cfg.n);

  for (std::size_t i = 0; i < n_members; ++i) {
    const double u = rng.uniform01();
    std::size_t s = 0;
    while (s + 1 < cum_weight.size() && u >= cum_weight[s]) ++s;
    const auto& st = cfg.strata[s];

    PatientRecord rec;
    rec.id = detail::padded_id("p", i + 1);
    rec.arm = rng.uniform01() < st.arm_balance ? Arm::experimental : Arm::control;
    rec.factors.resize(m);
    for (std::size_t d = 0; d < m; ++d) {
      rec.factors[d] = st.factor_center[d] + st.factor_spread[d] * rng.normal();
    }
    const bool experimental = rec.arm == Arm::experimental;
    rec.cost = (experimental ? st.cost_mean_experimental : st.cost_mean_control) + st.cost_sd * rng.normal();
    rec.effect =
        (experimental ? st.effect_mean_experimental : st.effect_mean_control) + st.effect_sd * rng.normal();
    records.push_back(std::move(rec));
    truth.stratum.push_back(static_cast<int>(s));
  }

  for (std::size_t i = 0; i < n_outliers; ++i) {
    PatientRecord rec;
    rec.id = detail::padded_id("out", i + 1);
    // random direction at a radius beyond every center
    std::vector<double> dir(m);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t d = 0; d < m; ++d) {
        dir[d] = rng.normal();
        norm += dir[d] * dir[d];
      }
      norm = std::sqrt(norm);
    } while (!(norm > 0.0));
    rec.factors.resize(m);
    for (std::size_t d = 0; d < m; ++d) rec.factors[d] = dir[d] / norm * outlier_radius;

    const auto& st = cfg.strata[rng.below(cfg.strata.size())];
    rec.arm = rng.uniform01() < 0.5 ? Arm::experimental : Arm::control;
    const bool experimental = rec.arm == Arm::experimental;
    rec.cost = (experimental ? st.cost_mean_experimental : st.cost_mean_control) + st.cost_sd * rng.normal();
    rec.effect =
        (experimental ? st.effect_mean_experimental : st.effect_mean_control) + st.effect_sd * rng.normal();
    records.push_back(std::move(rec));
    truth.stratum.push_back(-1);
  }

  truth.stratum_icers.reserve(cfg.strata.size());
  double overall = 0.0;
  for (const auto& st : cfg.strata) {
    const double icer = st.true_icer();
    truth.stratum_icers.push_back(icer);
    overall += st.weight * icer;
  }
  truth.overall_icer = overall;

  std::vector<std::string> factor_names(m);
  for (std::size_t d = 0; d < m; ++d) factor_names[d] = "f" + std::to_string(d + 1);

  return {TrialDataset(std::move(factor_names), std::move(records)), std::move(truth)};
}

struct RecoveryMetrics {
  double agreement = 0.0;               // best-matching cluster/stratum overlap share
  double stratified_abs_error = 0.0;    // |overall - true overall|
  std::optional<double> naive_abs_error;
};

namespace detail {

/// Maximum-overlap injective matching of found clusters onto true strata,
/// exact via bitmask DP (strata counts are small by construction).
inline double best_matching_overlap(const std::vector<std::vector<double>>& overlap) {
  const std::size_t k = overlap.size();
  if (k == 0) return 0.0;
  const std::size_t s = overlap.front().size();
  if (s == 0) return 0.0;
  if (s > 20) fail(errc::bad_config, "too many strata for exact matching");
  const std::size_t masks = std::size_t{1} << s;
  std::vector<double> best(masks, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> next = best;  // leaving cluster c unmatched
    for (std::size_t mask = 0; mask < masks; ++mask) {
      for (std::size_t t = 0; t < s; ++t) {
        if (mask & (std::size_t{1} << t)) continue;
        const std::size_t with = mask | (std::size_t{1} << t);
        next[with] = std::max(next[with], best[mask] + overlap[c][t]);
      }
    }
    best = std::move(next);
  }
  return *std::max_element(best.begin(), best.end());
}

}  // namespace detail

/// Compares a report against the generator's truth: cluster/stratum agreement
/// under the best injective relabeling (over non-outlier patients), plus the
/// absolute errors of the stratified and unstratified estimates.
inline RecoveryMetrics evaluate_recovery(const StratifiedReport& report, const GroundTruth& truth) {
  if (report.labels.size() != truth.stratum.size()) {
    fail(errc::mismatched_cohort, "report covers " + std::to_string(report.labels.size()) +
                                      " patients, truth covers " + std::to_string(truth.stratum.size()));
  }
  int n_strata = 0;
  for (int s : truth.stratum) n_strata = std::max(n_strata, s + 1);

  std::vector<std::vector<double>> overlap(
      static_cast<std::size_t>(report.cluster_count),
      std::vector<double>(static_cast<std::size_t>(n_strata), 0.0));
  std::size_t denom = 0;
  for (std::size_t i = 0; i < truth.stratum.size(); ++i) {
    if (truth.stratum[i] < 0) continue;  // injected outlier
    ++denom;
    const int label = report.labels[i];
    if (label >= 0) overlap[static_cast<std::size_t>(label)][static_cast<std::size_t>(truth.stratum[i])] += 1.0;
  }

  RecoveryMetrics metrics;
  metrics.agreement = denom > 0 ? detail::best_matching_overlap(overlap) / static_cast<double>(denom) : 1.0;
  metrics.stratified_abs_error = std::fabs(report.overall_icer - truth.overall_icer);
  if (report.naive_icer) metrics.naive_abs_error = std::fabs(*report.naive_icer - truth.overall_icer);
  return metrics;
}

}  // namespace strata_icer
