#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "strata_icer/error.hpp"
#include "strata_icer/stats.hpp"

namespace strata_icer {

enum class Metric { euclidean, mahalanobis };

constexpr const char* to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "mahalanobis";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "mahalanobis") return Metric::mahalanobis;
  return std::nullopt;
}

inline constexpr double kDefaultRidge = 1e-8;
inline constexpr double kDefaultScanThreshold = 3.0;
inline constexpr double kMaxConditionNumber = 1e12;

/// Per-column affine transform: z = (x - mean) / scale.
/// Constant columns keep scale 1 so they pass through centered and inert.
struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd Z = X;
    Z.rowwise() -= means.transpose();
    Z.array().rowwise() /= scales.transpose().array();
    return Z;
  }
};

struct Standardized {
  Eigen::MatrixXd z;
  Standardization transform;
};

/// Centers each column and divides by its sample standard deviation (n-1
/// denominator), making distances across heterogeneous factors comparable.
inline Standardized standardize(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) fail(errc::too_few_points, "standardize needs at least 2 rows");
  const Eigen::Index m = X.cols();
  Standardization t;
  t.means.resize(m);
  t.scales.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    RunningStats col;
    for (Eigen::Index i = 0; i < X.rows(); ++i) col.add(X(i, j));
    const double sd = col.sample_sd();
    t.means(j) = col.mean();
    t.scales(j) = sd > 0.0 ? sd : 1.0;
  }
  return Standardized{t.apply(X), std::move(t)};
}

/// Centroid plus ridged covariance and its inverse, the context for
/// Mahalanobis distances.
struct CovarianceModel {
  Eigen::VectorXd center;
  Eigen::MatrixXd covariance;  // sample covariance (n-1) with ridge added to the diagonal
  Eigen::MatrixXd inverse;
  double ridge = 0.0;
};

/// Fits the sample covariance of Z and inverts it through an eigendecomposition.
/// Throws SingularCovariance when the ridged matrix has a nonpositive eigenvalue
/// or a condition number above 1e12; the caller should raise the ridge.
inline CovarianceModel fit_covariance(const Eigen::MatrixXd& Z, double ridge = kDefaultRidge) {
  if (Z.rows() < 2) fail(errc::too_few_points, "covariance needs at least 2 rows");
  if (ridge < 0.0) fail(errc::bad_config, "ridge must be nonnegative");
  const Eigen::Index m = Z.cols();
  CovarianceModel model;
  model.ridge = ridge;
  model.center = Z.colwise().mean();
  const Eigen::MatrixXd centered = Z.rowwise() - model.center.transpose();
  Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(Z.rows() - 1);
  cov = ((cov + cov.transpose()) * 0.5).eval();  // kill asymmetry noise
  cov.diagonal().array() += ridge;
  model.covariance = cov;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(errc::singular_covariance, "eigendecomposition failed");
  const Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  const double lo = evals(0);
  const double hi = evals(m - 1);
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) {
    fail(errc::singular_covariance,
         "covariance is numerically singular (condition estimate " +
             std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) +
             "); raise the ridge");
  }
  model.inverse =
      solver.eigenvectors() * evals.cwiseInverse().asDiagonal() * solver.eigenvectors().transpose();
  return model;
}

/// sqrt((x - center)^T inverse (x - center)); reduces to the Euclidean
/// distance when the covariance is the identity.
inline double mahalanobis(const CovarianceModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd d = x - model.center;
  const double q = d.dot(model.inverse * d);
  return std::sqrt(q > 0.0 ? q : 0.0);
}

/// Centroid distance sweep: a point is flagged iff its distance exceeds
/// mean(distances) + threshold * sd(distances).
struct OutlierScan {
  std::vector<double> distances;
  double threshold = 0.0;
  double mean_distance = 0.0;
  double sd_distance = 0.0;
  std::vector<bool> flags;

  std::size_t flagged_count() const {
    std::size_t k = 0;
    for (bool f : flags) k += f ? 1 : 0;
    return k;
  }
};

/// Distance of each row to the data centroid under the chosen metric, with
/// flags per the rule above. With all rows identical the distance spread is
/// zero and nothing can be flagged.
inline OutlierScan centroid_scan(const Eigen::MatrixXd& X, Metric metric, double threshold,
                                 double ridge = kDefaultRidge) {
  if (X.rows() < 3) fail(errc::too_few_points, "centroid scan needs at least 3 rows");
  if (!(threshold > 0.0)) fail(errc::bad_config, "scan threshold must be positive");
  const Eigen::Index n = X.rows();

  OutlierScan scan;
  scan.threshold = threshold;
  scan.distances.resize(static_cast<std::size_t>(n));
  if (metric == Metric::mahalanobis) {
    const CovarianceModel model = fit_covariance(X, ridge);
    for (Eigen::Index i = 0; i < n; ++i) {
      scan.distances[static_cast<std::size_t>(i)] = mahalanobis(model, X.row(i).transpose());
    }
  } else {
    const Eigen::RowVectorXd center = X.colwise().mean();
    for (Eigen::Index i = 0; i < n; ++i) {
      scan.distances[static_cast<std::size_t>(i)] = (X.row(i) - center).norm();
    }
  }

  const RunningStats stats = accumulate(scan.distances);
  scan.mean_distance = stats.mean();
  scan.sd_distance = stats.sample_sd();
  const double cut = scan.mean_distance + threshold * scan.sd_distance;
  scan.flags.resize(scan.distances.size());
  for (std::size_t i = 0; i < scan.distances.size(); ++i) scan.flags[i] = scan.distances[i] > cut;
  return scan;
}

}  // namespace strata_icer
