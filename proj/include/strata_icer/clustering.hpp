#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "strata_icer/error.hpp"
#include "strata_icer/metrics.hpp"

namespace strata_icer {

/// Label given to points that belong to no cluster.
inline constexpr int kNoiseLabel = -1;

struct DbscanParams {
  double eps = 0.0;
  int min_pts = 0;
  Metric metric = Metric::euclidean;
};

struct ClusterAssignment {
  std::vector<int> labels;  // kNoiseLabel or a cluster id in [0, cluster_count)
  int cluster_count = 0;

  std::size_t noise_count() const {
    std::size_t k = 0;
    for (int l : labels) k += (l == kNoiseLabel) ? 1 : 0;
    return k;
  }

  std::vector<std::size_t> members_of(int cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cluster) out.push_back(i);
    }
    return out;
  }
};

namespace detail {

// Row-to-row distance under the chosen metric. The Mahalanobis variant uses
// one global covariance model, never per-cluster fits.
class PairwiseDistance {
 public:
  PairwiseDistance(const Eigen::MatrixXd& Z, Metric metric, const CovarianceModel* cov)
      : z_(Z), metric_(metric), cov_(cov) {
    if (metric == Metric::mahalanobis) {
      if (cov == nullptr) fail(errc::bad_config, "mahalanobis metric requires a covariance model");
      if (cov->inverse.rows() != Z.cols()) {
        fail(errc::bad_config, "covariance model dimension does not match the data");
      }
    }
  }

  double operator()(Eigen::Index i, Eigen::Index j) const {
    if (metric_ == Metric::euclidean) return (z_.row(i) - z_.row(j)).norm();
    const Eigen::VectorXd d = (z_.row(i) - z_.row(j)).transpose();
    const double q = d.dot(cov_->inverse * d);
    return std::sqrt(q > 0.0 ? q : 0.0);
  }

 private:
  const Eigen::MatrixXd& z_;
  Metric metric_;
  const CovarianceModel* cov_;
};

}  // namespace detail

/// Density clustering with the classic semantics: a point is core when its
/// closed eps-neighborhood (distance <= eps, the point itself included)
/// contains at least min_pts points; clusters are maximal density-connected
/// sets; the rest is noise.
///
/// Deterministic given input row order: seeds are scanned in row order,
/// expansion proceeds FIFO with neighbors enumerated in row order, cluster
/// ids follow discovery order, and a border point stays with the first
/// cluster that reaches it.
inline ClusterAssignment dbscan(const Eigen::MatrixXd& Z, const DbscanParams& params,
                                const CovarianceModel* cov = nullptr) {
  if (!(params.eps > 0.0) || !std::isfinite(params.eps)) fail(errc::bad_config, "eps must be positive and finite");
  if (params.min_pts < 1) fail(errc::bad_config, "min_pts must be at least 1");
  const detail::PairwiseDistance dist(Z, params.metric, cov);
  const Eigen::Index n = Z.rows();

  constexpr int kUnvisited = -2;
  std::vector<int> labels(static_cast<std::size_t>(n), kUnvisited);

  const auto neighbors = [&](Eigen::Index i) {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (dist(i, j) <= params.eps) out.push_back(j);
    }
    return out;
  };

  int next_cluster = 0;
  std::deque<Eigen::Index> queue;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] != kUnvisited) continue;
    const auto seed_neighbors = neighbors(i);
    if (seed_neighbors.size() < static_cast<std::size_t>(params.min_pts)) {
      labels[static_cast<std::size_t>(i)] = kNoiseLabel;
      continue;
    }
    const int cluster = next_cluster++;
    labels[static_cast<std::size_t>(i)] = cluster;
    queue.assign(seed_neighbors.begin(), seed_neighbors.end());
    while (!queue.empty()) {
      const Eigen::Index q = queue.front();
      queue.pop_front();
      int& label = labels[static_cast<std::size_t>(q)];
      if (label == kNoiseLabel) {
        label = cluster;  // border point, adopted but not expanded
        continue;
      }
      if (label != kUnvisited) continue;
      label = cluster;
      const auto q_neighbors = neighbors(q);
      if (q_neighbors.size() >= static_cast<std::size_t>(params.min_pts)) {
        queue.insert(queue.end(), q_neighbors.begin(), q_neighbors.end());
      }
    }
  }
  return ClusterAssignment{std::move(labels), next_cluster};
}

/// Distance of each point to its k-th nearest other point, sorted ascending.
/// Printed by the CLI so an analyst can pick eps at the elbow.
inline std::vector<double> k_distance_profile(const Eigen::MatrixXd& Z, int k, Metric metric,
                                              const CovarianceModel* cov = nullptr) {
  const Eigen::Index n = Z.rows();
  if (k < 1) fail(errc::bad_config, "k must be at least 1");
  if (static_cast<Eigen::Index>(k) >= n) {
    fail(errc::k_too_large, "k = " + std::to_string(k) + " but only " + std::to_string(n) + " points");
  }
  const detail::PairwiseDistance dist(Z, metric, cov);
  std::vector<double> profile;
  profile.reserve(static_cast<std::size_t>(n));
  std::vector<double> buffer;
  for (Eigen::Index i = 0; i < n; ++i) {
    buffer.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) buffer.push_back(dist(i, j));
    }
    std::nth_element(buffer.begin(), buffer.begin() + (k - 1), buffer.end());
    profile.push_back(buffer[static_cast<std::size_t>(k - 1)]);
  }
  std::sort(profile.begin(), profile.end());
  return profile;
}

/// Heuristic starting parameters: min_pts = m + 1, eps at the 90th percentile
/// of the min_pts-distance profile. A starting point for elbow inspection,
/// not a tuned choice.
inline DbscanParams suggest_params(const Eigen::MatrixXd& Z, Metric metric,
                                   const CovarianceModel* cov = nullptr) {
  const Eigen::Index n = Z.rows();
  const Eigen::Index m = Z.cols();
  if (n < 2 * m + 2) {
    fail(errc::too_few_points, "parameter suggestion needs at least 2m+2 = " + std::to_string(2 * m + 2) +
                                   " points, got " + std::to_string(n));
  }
  DbscanParams params;
  params.metric = metric;
  params.min_pts = static_cast<int>(m) + 1;
  const auto profile = k_distance_profile(Z, params.min_pts, metric, cov);
  // nearest-rank 90th percentile
  std::size_t idx = static_cast<std::size_t>(std::ceil(0.90 * static_cast<double>(profile.size())));
  idx = idx > 0 ? idx - 1 : 0;
  if (idx >= profile.size()) idx = profile.size() - 1;
  double eps = profile[idx];
  if (!(eps > 0.0)) {
    // heavy duplication: fall back to the smallest positive spacing
    const auto it = std::find_if(profile.begin(), profile.end(), [](double d) { return d > 0.0; });
    eps = it != profile.end() ? *it : 1.0;
  }
  params.eps = eps;
  return params;
}

}  // namespace strata_icer
