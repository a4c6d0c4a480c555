#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "strata_icer/clustering.hpp"
#include "strata_icer/rng.hpp"
#include "support/dbscan_reference.hpp"

using namespace strata_icer;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> xs) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) Z(i++, 0) = x;
  return Z;
}

}  // namespace

TEST_CASE("two well-separated 1-D groups form two clusters", "[clustering]") {
  const Eigen::MatrixXd Z = column({0.0, 0.1, 0.2, 10.0, 10.1, 10.2});
  const auto result = dbscan(Z, {.eps = 0.5, .min_pts = 2, .metric = Metric::euclidean});
  REQUIRE(result.cluster_count == 2);
  REQUIRE(result.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
  REQUIRE(result.noise_count() == 0);
}

TEST_CASE("a lone point below min_pts is noise", "[clustering]") {
  const Eigen::MatrixXd Z = column({0.0});
  const auto result = dbscan(Z, {.eps = 0.5, .min_pts = 2, .metric = Metric::euclidean});
  REQUIRE(result.cluster_count == 0);
  REQUIRE(result.labels == std::vector<int>{kNoiseLabel});
}

TEST_CASE("identical points form one cluster", "[clustering]") {
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(7, 2, 3.0);
  const auto result = dbscan(Z, {.eps = 1e-6, .min_pts = 7, .metric = Metric::euclidean});
  REQUIRE(result.cluster_count == 1);
  for (int l : result.labels) REQUIRE(l == 0);
}

TEST_CASE("output is deterministic", "[clustering]") {
  Rng rng(101);
  auto inst = test_support::make_dbscan_instance(rng, 0);
  const DbscanParams params{.eps = inst.eps, .min_pts = inst.min_pts, .metric = Metric::euclidean};
  const auto a = dbscan(inst.z, params);
  const auto b = dbscan(inst.z, params);
  REQUIRE(a.labels == b.labels);
  REQUIRE(a.cluster_count == b.cluster_count);
}

TEST_CASE("labels match the brute-force reference on random instances", "[clustering]") {
  Rng rng(202);
  for (int t = 0; t < 40; ++t) {
    const auto inst = test_support::make_dbscan_instance(rng, t);
    const auto got = dbscan(inst.z, {.eps = inst.eps, .min_pts = inst.min_pts, .metric = Metric::euclidean});
    const auto want = test_support::dbscan_reference(inst.z, inst.eps, inst.min_pts);
    INFO("instance " << t << " n=" << inst.z.rows() << " m=" << inst.z.cols() << " eps=" << inst.eps
                     << " min_pts=" << inst.min_pts);
    REQUIRE(got.cluster_count == want.cluster_count);
    REQUIRE(got.labels == want.labels);
  }
}

TEST_CASE("core-point partition is invariant under row permutation", "[clustering]") {
  Rng rng(303);
  for (int t = 0; t < 10; ++t) {
    const auto inst = test_support::make_dbscan_instance(rng, t);
    const Eigen::Index n = inst.z.rows();
    const DbscanParams params{.eps = inst.eps, .min_pts = inst.min_pts, .metric = Metric::euclidean};
    const auto base = dbscan(inst.z, params);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.below(i)]);
    }
    Eigen::MatrixXd shuffled(n, inst.z.cols());
    for (Eigen::Index i = 0; i < n; ++i) shuffled.row(i) = inst.z.row(perm[static_cast<std::size_t>(i)]);
    const auto permuted = dbscan(shuffled, params);

    // identify core points from first principles
    std::vector<bool> core(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      int count = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if ((inst.z.row(i) - inst.z.row(j)).norm() <= inst.eps) ++count;
      }
      core[static_cast<std::size_t>(i)] = count >= inst.min_pts;
    }
    std::vector<Eigen::Index> inverse(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;

    for (Eigen::Index a = 0; a < n; ++a) {
      if (!core[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = 0; b < n; ++b) {
        if (!core[static_cast<std::size_t>(b)]) continue;
        const bool together_base = base.labels[static_cast<std::size_t>(a)] == base.labels[static_cast<std::size_t>(b)];
        const bool together_perm =
            permuted.labels[static_cast<std::size_t>(inverse[static_cast<std::size_t>(a)])] ==
            permuted.labels[static_cast<std::size_t>(inverse[static_cast<std::size_t>(b)])];
        REQUIRE(together_base == together_perm);
      }
    }
  }
}

TEST_CASE("growing eps never increases noise", "[clustering]") {
  Rng rng(404);
  const auto inst = test_support::make_dbscan_instance(rng, 1);
  std::size_t previous = static_cast<std::size_t>(inst.z.rows()) + 1;
  for (double eps : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0}) {
    const auto result = dbscan(inst.z, {.eps = eps, .min_pts = inst.min_pts, .metric = Metric::euclidean});
    REQUIRE(result.noise_count() <= previous);
    previous = result.noise_count();
  }
}

TEST_CASE("mahalanobis metric needs a covariance model", "[clustering]") {
  const Eigen::MatrixXd Z = column({0.0, 1.0, 2.0});
  REQUIRE_THROWS_AS(dbscan(Z, {.eps = 1.0, .min_pts = 1, .metric = Metric::mahalanobis}), Error);
  const auto model = fit_covariance(Z, 1e-8);
  REQUIRE_NOTHROW(dbscan(Z, {.eps = 1.0, .min_pts = 1, .metric = Metric::mahalanobis}, &model));
}

TEST_CASE("k-distance profile hand cases", "[clustering]") {
  REQUIRE(k_distance_profile(column({0.0, 1.0, 2.0}), 1, Metric::euclidean) ==
          std::vector<double>{1.0, 1.0, 1.0});
  REQUIRE(k_distance_profile(column({0.0, 5.0}), 1, Metric::euclidean) == std::vector<double>{5.0, 5.0});
  REQUIRE_THROWS_MATCHES(k_distance_profile(column({0.0, 1.0, 2.0}), 3, Metric::euclidean), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == errc::k_too_large; }));
}

TEST_CASE("suggested parameters separate two blobs", "[clustering]") {
  Rng rng(505);
  const Eigen::Index per_blob = 40;
  Eigen::MatrixXd Z(2 * per_blob, 2);
  for (Eigen::Index i = 0; i < per_blob; ++i) {
    Z(i, 0) = 0.1 * rng.normal();
    Z(i, 1) = 0.1 * rng.normal();
    Z(per_blob + i, 0) = 8.0 + 0.1 * rng.normal();
    Z(per_blob + i, 1) = 8.0 + 0.1 * rng.normal();
  }
  const auto params = suggest_params(Z, Metric::euclidean);
  REQUIRE(params.min_pts == 3);  // m + 1
  REQUIRE(params.eps > 0.0);
  const auto result = dbscan(Z, params);
  REQUIRE(result.cluster_count == 2);
}

TEST_CASE("suggest needs 2m+2 points", "[clustering]") {
  Eigen::MatrixXd Z(5, 2);  // 2m+1 rows
  Z.setRandom();
  REQUIRE_THROWS_MATCHES(suggest_params(Z, Metric::euclidean), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == errc::too_few_points; }));
}
