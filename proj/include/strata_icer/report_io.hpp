#pragma once

#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "strata_icer/dataset.hpp"
#include "strata_icer/error.hpp"
#include "strata_icer/icer.hpp"

namespace strata_icer {

namespace detail {

inline nlohmann::ordered_json opt_value(const std::optional<double>& v) {
  // absent values serialize as an explicit null, never NaN
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json cluster_to_json(const ClusterIcer& c, double weight) {
  nlohmann::ordered_json j;
  j["id"] = c.cluster_id;
  j["status"] = to_string(c.status);
  j["n"] = c.size();
  j["n_e"] = c.n_experimental;
  j["n_c"] = c.n_control;
  j["mean_cost_e"] = opt_value(c.mean_cost_experimental);
  j["mean_cost_c"] = opt_value(c.mean_cost_control);
  j["mean_eff_e"] = opt_value(c.mean_effect_experimental);
  j["mean_eff_c"] = opt_value(c.mean_effect_control);
  j["delta_cost"] = opt_value(c.delta_cost);
  j["delta_eff"] = opt_value(c.delta_effect);
  j["icer"] = opt_value(c.icer);
  j["var"] = opt_value(c.variance);
  j["weight"] = weight;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const StratifiedReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["n_out"] = r.n_out;
  j["n_out_scan"] = r.n_out_scan;
  j["n_out_noise"] = r.n_out_noise;
  j["k"] = r.cluster_count;
  j["weighting_mode"] = to_string(r.weighting_mode);
  j["overall_icer"] = r.overall_icer;
  j["overall_var"] = detail::opt_value(r.overall_variance);
  j["naive_icer"] = detail::opt_value(r.naive_icer);
  j["weights"] = r.weights;

  auto clusters = nlohmann::ordered_json::array();
  for (const auto& c : r.clusters) {
    clusters.push_back(detail::cluster_to_json(c, r.weights[static_cast<std::size_t>(c.cluster_id)]));
  }
  j["clusters"] = std::move(clusters);

  auto excluded = nlohmann::ordered_json::array();
  for (const auto& c : r.excluded_clusters) {
    excluded.push_back(detail::cluster_to_json(c, 0.0));
  }
  j["excluded_clusters"] = std::move(excluded);

  j["dbscan"] = {{"metric", to_string(r.params.metric)},
                 {"eps", r.params.eps},
                 {"min_pts", r.params.min_pts}};
  j["config"] = {{"metric", to_string(r.config.metric)},
                 {"auto_params", r.config.auto_params},
                 {"scan", r.config.scan_enabled},
                 {"scan_threshold", r.config.scan_threshold},
                 {"ridge", r.config.ridge},
                 {"eff_floor", r.config.eff_floor},
                 {"weighting", to_string(r.config.weighting)},
                 {"bootstrap", r.config.bootstrap_replicates},
                 {"seed", r.config.seed},
                 {"strict", r.config.strict}};
  j["labels"] = r.labels;
  return j;
}

inline void write_report_json(const StratifiedReport& r, std::ostream& out) {
  out << report_to_json(r).dump(2) << '\n';
}

inline void write_report_json_file(const StratifiedReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  write_report_json(r, out);
}

/// Flat per-cluster table, valid and excluded clusters together, ascending id.
/// Cells without a value are left empty.
inline void write_clusters_csv(const StratifiedReport& r, std::ostream& out) {
  const auto cell = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string();
  };
  out << "cluster_id,status,n,n_e,n_c,mean_cost_e,mean_cost_c,mean_eff_e,mean_eff_c,"
         "delta_cost,delta_eff,icer,var,weight\n";
  std::size_t vi = 0, ei = 0;
  for (int id = 0; id < r.cluster_count; ++id) {
    const ClusterIcer* c = nullptr;
    if (vi < r.clusters.size() && r.clusters[vi].cluster_id == id) {
      c = &r.clusters[vi++];
    } else if (ei < r.excluded_clusters.size() && r.excluded_clusters[ei].cluster_id == id) {
      c = &r.excluded_clusters[ei++];
    } else {
      continue;  // unreachable for reports produced by run_pipeline
    }
    out << c->cluster_id << ',' << to_string(c->status) << ',' << c->size() << ',' << c->n_experimental
        << ',' << c->n_control << ',' << cell(c->mean_cost_experimental) << ','
        << cell(c->mean_cost_control) << ',' << cell(c->mean_effect_experimental) << ','
        << cell(c->mean_effect_control) << ',' << cell(c->delta_cost) << ',' << cell(c->delta_effect)
        << ',' << cell(c->icer) << ',' << cell(c->variance) << ','
        << detail::format_double(r.weights[static_cast<std::size_t>(id)]) << '\n';
  }
}

inline void write_clusters_csv_file(const StratifiedReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io_error, "cannot write '" + path + "'");
  write_clusters_csv(r, out);
}

}  // namespace strata_icer
