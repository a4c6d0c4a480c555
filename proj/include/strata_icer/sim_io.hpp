#pragma once

#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "strata_icer/error.hpp"
#include "strata_icer/simulate.hpp"

namespace strata_icer {

namespace detail {

template <typename T>
T fetch(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail(errc::bad_config, std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_config, std::string("key '") + key + "': " + e.what());
  }
}

template <typename T>
T fetch_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? fetch<T>(j, key) : fallback;
}

}  // namespace detail

/// Simulation config schema:
/// {
///   "n": 2000, "seed": 1, "outlier_rate": 0.01, "outlier_scale": 12.0,
///   "strata": [ { "weight": 0.4, "factor_center": [0,0], "factor_spread": [1,1],
///                 "cost_mean_e": 1000, "cost_mean_c": 500, "cost_sd": 50,
///                 "eff_mean_e": 20, "eff_mean_c": 10, "eff_sd": 1,
///                 "arm_balance": 0.8 }, ... ]
/// }
inline SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig cfg;
  cfg.n = detail::fetch<std::size_t>(j, "n");
  cfg.seed = detail::fetch_or<std::uint64_t>(j, "seed", 0);
  cfg.outlier_rate = detail::fetch_or<double>(j, "outlier_rate", 0.0);
  cfg.outlier_scale = detail::fetch_or<double>(j, "outlier_scale", 10.0);
  if (!j.contains("strata")) fail(errc::bad_config, "missing key 'strata'");
  for (const auto& sj : j.at("strata")) {
    StratumSpec st;
    st.weight = detail::fetch<double>(sj, "weight");
    st.factor_center = detail::fetch<std::vector<double>>(sj, "factor_center");
    st.factor_spread = detail::fetch<std::vector<double>>(sj, "factor_spread");
    st.cost_mean_experimental = detail::fetch<double>(sj, "cost_mean_e");
    st.cost_mean_control = detail::fetch<double>(sj, "cost_mean_c");
    st.cost_sd = detail::fetch<double>(sj, "cost_sd");
    st.effect_mean_experimental = detail::fetch<double>(sj, "eff_mean_e");
    st.effect_mean_control = detail::fetch<double>(sj, "eff_mean_c");
    st.effect_sd = detail::fetch<double>(sj, "eff_sd");
    st.arm_balance = detail::fetch_or<double>(sj, "arm_balance", 0.5);
    cfg.strata.push_back(std::move(st));
  }
  return cfg;
}

inline SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_config, "invalid JSON in '" + path + "': " + e.what());
  }
  return sim_config_from_json(j);
}

inline nlohmann::ordered_json ground_truth_to_json(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["overall_icer"] = truth.overall_icer;
  j["stratum_icers"] = truth.stratum_icers;
  j["stratum"] = truth.stratum;
  return j;
}

inline void write_ground_truth_file(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  out << ground_truth_to_json(truth).dump(2) << '\n';
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth truth;
  truth.overall_icer = detail::fetch<double>(j, "overall_icer");
  truth.stratum_icers = detail::fetch<std::vector<double>>(j, "stratum_icers");
  truth.stratum = detail::fetch<std::vector<int>>(j, "stratum");
  return truth;
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::bad_config, "invalid JSON in '" + path + "': " + e.what());
  }
  return ground_truth_from_json(j);
}

}  // namespace strata_icer
