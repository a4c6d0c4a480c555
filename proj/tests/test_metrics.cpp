#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "strata_icer/metrics.hpp"
#include "strata_icer/rng.hpp"

using namespace strata_icer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index n, Eigen::Index m, double scale = 1.0) {
  Eigen::MatrixXd X(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) X(i, j) = scale * rng.normal();
  }
  return X;
}

}  // namespace

TEST_CASE("standardize centers and scales by the sample sd", "[metrics]") {
  Eigen::MatrixXd X(2, 1);
  X << 2.0, 4.0;
  const auto [z, t] = standardize(X);
  const double root_half = 1.0 / std::sqrt(2.0);
  REQUIRE_THAT(z(0, 0), WithinAbs(-root_half, 1e-12));
  REQUIRE_THAT(z(1, 0), WithinAbs(root_half, 1e-12));
  REQUIRE_THAT(t.means(0), WithinAbs(3.0, 1e-12));
  REQUIRE_THAT(t.scales(0), WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("constant columns pass through with scale 1", "[metrics]") {
  Eigen::MatrixXd X(3, 2);
  X << 5.0, 1.0, 5.0, 2.0, 5.0, 3.0;
  const auto [z, t] = standardize(X);
  REQUIRE(t.scales(0) == 1.0);
  REQUIRE(z.col(0).isZero(0.0));
  REQUIRE_THAT(z.col(1).mean(), WithinAbs(0.0, 1e-10));
}

TEST_CASE("standardize is idempotent", "[metrics]") {
  Rng rng(7);
  const Eigen::MatrixXd X = random_matrix(rng, 40, 3, 12.5);
  const auto first = standardize(X);
  const auto second = standardize(first.z);
  REQUIRE((second.z - first.z).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index j = 0; j < 3; ++j) {
    RunningStats col;
    for (Eigen::Index i = 0; i < first.z.rows(); ++i) col.add(first.z(i, j));
    REQUIRE_THAT(col.mean(), WithinAbs(0.0, 1e-10));
    REQUIRE_THAT(col.sample_sd(), WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("fit_covariance matches the hand computation in 1-D", "[metrics]") {
  Eigen::MatrixXd Z(2, 1);
  Z << 0.0, 2.0;
  const double ridge = 1e-8;
  const auto model = fit_covariance(Z, ridge);
  REQUIRE_THAT(model.covariance(0, 0), WithinAbs(2.0 + ridge, 1e-12));
  REQUIRE_THAT(model.center(0), WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(model.inverse(0, 0), WithinRel(1.0 / (2.0 + ridge), 1e-12));
}

TEST_CASE("covariance of independent standardized columns is near identity", "[metrics]") {
  Rng rng(11);
  const Eigen::MatrixXd X = random_matrix(rng, 5000, 2, 3.0);
  const auto [z, t] = standardize(X);
  const auto model = fit_covariance(z, 0.0);
  REQUIRE((model.covariance - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("collinear columns without ridge are singular", "[metrics]") {
  Eigen::MatrixXd Z(10, 2);
  for (int i = 0; i < 10; ++i) {
    Z(i, 0) = static_cast<double>(i);
    Z(i, 1) = 3.0 * static_cast<double>(i);
  }
  REQUIRE_THROWS_MATCHES(fit_covariance(Z, 0.0), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                           return e.code() == errc::singular_covariance;
                         }));
  REQUIRE_NOTHROW(fit_covariance(Z, 0.1));
}

TEST_CASE("inverse times covariance is the identity", "[metrics]") {
  Rng rng(13);
  const Eigen::MatrixXd Z = random_matrix(rng, 200, 4, 2.0);
  const auto model = fit_covariance(Z, 1e-8);
  const Eigen::MatrixXd eye = model.inverse * model.covariance;
  REQUIRE((eye - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("mahalanobis distance hand cases", "[metrics]") {
  CovarianceModel identity;
  identity.center = Eigen::VectorXd::Zero(2);
  identity.covariance = Eigen::MatrixXd::Identity(2, 2);
  identity.inverse = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  REQUIRE_THAT(mahalanobis(identity, x), WithinAbs(5.0, 1e-12));
  REQUIRE(mahalanobis(identity, identity.center) == 0.0);

  CovarianceModel stretched = identity;
  stretched.covariance = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  stretched.inverse = Eigen::Vector2d(0.25, 1.0).asDiagonal();
  Eigen::VectorXd y(2);
  y << 2.0, 0.0;
  REQUIRE_THAT(mahalanobis(stretched, y), WithinAbs(1.0, 1e-12));
}

TEST_CASE("identity covariance reduces mahalanobis to euclidean", "[metrics]") {
  Rng rng(17);
  CovarianceModel identity;
  identity.center = Eigen::VectorXd::Zero(3);
  identity.covariance = Eigen::MatrixXd::Identity(3, 3);
  identity.inverse = Eigen::MatrixXd::Identity(3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(3);
    for (int d = 0; d < 3; ++d) x(d) = 10.0 * rng.normal();
    REQUIRE_THAT(mahalanobis(identity, x), WithinAbs(x.norm(), 1e-12));
  }
}

TEST_CASE("mahalanobis distances are affine invariant", "[metrics]") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::MatrixXd X = random_matrix(rng, 60, m);
    Eigen::MatrixXd A(m, m);
    do {
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) A(i, j) = 2.0 * rng.uniform01() - 1.0;
      }
      A.diagonal().array() += 2.0;
    } while (std::fabs(A.determinant()) < 0.5);
    Eigen::VectorXd b(m);
    for (Eigen::Index d = 0; d < m; ++d) b(d) = 4.0 * rng.normal();

    const Eigen::MatrixXd Y = (X * A.transpose()).rowwise() + b.transpose();
    const auto model_x = fit_covariance(X, 0.0);
    const auto model_y = fit_covariance(Y, 0.0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double dx = mahalanobis(model_x, X.row(i).transpose());
      const double dy = mahalanobis(model_y, Y.row(i).transpose());
      REQUIRE_THAT(dy, WithinRel(dx, 1e-6));
    }
  }
}

TEST_CASE("centroid scan flags exactly the planted far point", "[metrics]") {
  Rng rng(23);
  const Eigen::Index n = 51;
  Eigen::MatrixXd X(n, 2);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    X(i, 0) = rng.uniform01() - 0.5;
    X(i, 1) = rng.uniform01() - 0.5;
  }
  X(n - 1, 0) = 100.0;
  X(n - 1, 1) = 100.0;

  for (Metric metric : {Metric::euclidean, Metric::mahalanobis}) {
    const auto scan = centroid_scan(X, metric, 3.0);
    REQUIRE(scan.flags[static_cast<std::size_t>(n - 1)]);
    REQUIRE(scan.flagged_count() == 1);
    // brute-force re-check of the flag rule
    RunningStats stats;
    for (double d : scan.distances) stats.add(d);
    const double cut = stats.mean() + 3.0 * stats.sample_sd();
    for (std::size_t i = 0; i < scan.distances.size(); ++i) {
      REQUIRE(scan.flags[i] == (scan.distances[i] > cut));
    }
  }
}

TEST_CASE("scan of identical points flags nothing", "[metrics]") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(10, 2, 4.2);
  const auto scan = centroid_scan(X, Metric::euclidean, 3.0);
  for (double d : scan.distances) REQUIRE(d == 0.0);
  REQUIRE(scan.flagged_count() == 0);
}

TEST_CASE("huge thresholds flag nothing and flags shrink as thresholds grow", "[metrics]") {
  Rng rng(29);
  const Eigen::MatrixXd X = random_matrix(rng, 120, 3, 5.0);
  REQUIRE(centroid_scan(X, Metric::euclidean, 1e9).flagged_count() == 0);

  std::size_t previous = X.rows();
  for (double threshold : {0.5, 1.0, 2.0, 3.0}) {
    const auto scan = centroid_scan(X, Metric::euclidean, threshold);
    REQUIRE(scan.flagged_count() <= previous);
    previous = scan.flagged_count();
  }
  // subset property between consecutive thresholds
  const auto loose = centroid_scan(X, Metric::euclidean, 1.0);
  const auto tight = centroid_scan(X, Metric::euclidean, 2.0);
  for (std::size_t i = 0; i < tight.flags.size(); ++i) {
    if (tight.flags[i]) REQUIRE(loose.flags[i]);
  }
}

TEST_CASE("scan needs at least 3 rows", "[metrics]") {
  Eigen::MatrixXd X(2, 1);
  X << 0.0, 1.0;
  REQUIRE_THROWS_AS(centroid_scan(X, Metric::euclidean, 3.0), Error);
}
