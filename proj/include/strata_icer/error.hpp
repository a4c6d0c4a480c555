#pragma once

#include <stdexcept>
#include <string>

namespace strata_icer {

enum class errc {
  // input / schema
  missing_column,
  ragged_row,
  non_numeric_cell,
  unknown_arm_label,
  duplicate_id,
  empty_arm,
  non_finite_value,
  negative_cost,
  // metrics / clustering
  singular_covariance,
  too_few_points,
  k_too_large,
  // estimation
  zero_effect_delta,
  unknown_cluster,
  cluster_not_valid,
  no_valid_clusters,
  all_noise,
  excluded_cluster,
  // simulation
  degenerate_stratum,
  mismatched_cohort,
  // generic
  bad_config,
  io_error,
};

constexpr const char* errc_name(errc c) {
  switch (c) {
    case errc::missing_column: return "MissingColumn";
    case errc::ragged_row: return "RaggedRow";
    case errc::non_numeric_cell: return "NonNumericCell";
    case errc::unknown_arm_label: return "UnknownArmLabel";
    case errc::duplicate_id: return "DuplicateId";
    case errc::empty_arm: return "EmptyArm";
    case errc::non_finite_value: return "NonFiniteValue";
    case errc::negative_cost: return "NegativeCost";
    case errc::singular_covariance: return "SingularCovariance";
    case errc::too_few_points: return "TooFewPoints";
    case errc::k_too_large: return "KTooLarge";
    case errc::zero_effect_delta: return "ZeroEffectDelta";
    case errc::unknown_cluster: return "UnknownCluster";
    case errc::cluster_not_valid: return "ClusterNotValid";
    case errc::no_valid_clusters: return "NoValidClusters";
    case errc::all_noise: return "AllNoise";
    case errc::excluded_cluster: return "ExcludedCluster";
    case errc::degenerate_stratum: return "DegenerateStratum";
    case errc::mismatched_cohort: return "MismatchedCohort";
    case errc::bad_config: return "BadConfig";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

/// Library-wide exception; what() starts with the stable error name so callers
/// (and shell scripts) can match on it.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& detail) { throw Error(code, detail); }

}  // namespace strata_icer
