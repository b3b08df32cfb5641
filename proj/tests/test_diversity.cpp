#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "xrm/diversity.hpp"

using namespace xrm;

TEST_CASE("exclusivity counts shared support") {
  CHECK(exclusivity(Eigen::Vector3d(1, 0, 2), Eigen::Vector3d(0, 3, 1)) == 1);
  CHECK(exclusivity(Eigen::Vector3d(1, 0, -2), Eigen::Vector3d::Ones()) == 2);
  CHECK(exclusivity(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()) == 0);
  CHECK_THROWS_AS(exclusivity(Eigen::Vector2d(1, 1), Eigen::Vector3d(1, 1, 1)), DataError);
}

TEST_CASE("relaxed exclusivity") {
  CHECK(relaxed_exclusivity(Eigen::Vector2d(1, -2), Eigen::Vector2d(3, 4)) == 11.0);
  CHECK(relaxed_exclusivity(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 5.0);
  CHECK(relaxed_exclusivity(Eigen::Vector2d(1, -2), Eigen::Vector2d::Ones()) == 3.0);
  CHECK_THROWS_AS(relaxed_exclusivity(Eigen::Vector2d(1, 1), Eigen::Vector3d(1, 1, 1)), DataError);
}

TEST_CASE("exclusivity regularizer") {
  Eigen::MatrixXd W(2, 2);
  W << 1, -1,  //
      2, 0;
  CHECK(exclusivity_regularizer(W) == 4.0);
  CHECK(exclusivity_regularizer(Eigen::Vector2d(3, 4)) == 12.5);
  CHECK(exclusivity_regularizer(Eigen::MatrixXd::Zero(3, 4)) == 0.0);
  W(0, 0) = std::nan("");
  CHECK_THROWS_AS(exclusivity_regularizer(W), DataError);
}

TEST_CASE("diversity report on small ensembles") {
  Eigen::MatrixXd same(2, 2);
  same << 1, 1,  //
      0, 0;
  const DiversityReport a = diversity_report(same);
  CHECK(a.pairwise_relaxed_exclusivity(0, 1) == 1.0);
  CHECK(a.pairwise_exclusivity(0, 1) == 1);
  CHECK(a.regularizer_value == 2.0);

  const DiversityReport b = diversity_report(Eigen::Matrix2d::Identity());
  CHECK(b.pairwise_relaxed_exclusivity(0, 1) == 0.0);
  CHECK(b.pairwise_exclusivity(1, 0) == 0);
  CHECK(b.pairwise_relaxed_exclusivity(0, 0) == 1.0);

  CHECK_THROWS_AS(diversity_report(Eigen::MatrixXd(3, 0)), DataError);
}

TEST_CASE("regularizer expands into squared norms plus pairwise relaxed exclusivity") {
  CounterRng rng(21);
  for (int k = 0; k < 300; ++k) {
    const Index M = 1 + static_cast<Index>(rng.below(8));
    const Index C = 1 + static_cast<Index>(rng.below(6));
    const Eigen::MatrixXd W = testing::random_matrix(rng, M, C, 0.3);
    double expanded = 0.5 * W.squaredNorm();
    for (Index a = 0; a < C; ++a) {
      for (Index c = a + 1; c < C; ++c) expanded += relaxed_exclusivity(W.col(a), W.col(c));
    }
    CHECK(exclusivity_regularizer(W) == doctest::Approx(expanded).epsilon(1e-9));
  }
}

TEST_CASE("report invariants on random W") {
  CounterRng rng(22);
  for (int k = 0; k < 100; ++k) {
    const Index M = 1 + static_cast<Index>(rng.below(8));
    const Index C = 1 + static_cast<Index>(rng.below(6));
    const Eigen::MatrixXd W = testing::random_matrix(rng, M, C, 0.5);
    const DiversityReport r = diversity_report(W);
    CHECK(r.pairwise_relaxed_exclusivity.isApprox(r.pairwise_relaxed_exclusivity.transpose(), 0.0));
    CHECK(r.pairwise_exclusivity == r.pairwise_exclusivity.transpose());
    CHECK(r.regularizer_value == exclusivity_regularizer(W));
    CHECK(r.regularizer_value >= 0.5 * W.squaredNorm() - 1e-12);
    for (Index a = 0; a < C; ++a) {
      CHECK(r.pairwise_relaxed_exclusivity(a, a) == doctest::Approx(W.col(a).squaredNorm()));
      for (Index c = 0; c < C; ++c) {
        const auto nnz_a = static_cast<int>((W.col(a).array() != 0.0).count());
        const auto nnz_c = static_cast<int>((W.col(c).array() != 0.0).count());
        CHECK(r.pairwise_exclusivity(a, c) <= std::min(nnz_a, nnz_c));
        const bool disjoint = ((W.col(a).array() != 0.0) && (W.col(c).array() != 0.0)).count() == 0;
        CHECK((r.pairwise_relaxed_exclusivity(a, c) == 0.0) == disjoint);
        CHECK(r.pairwise_relaxed_exclusivity(a, c) >= 0.0);
      }
    }
  }
}

TEST_CASE("regularizer is convex") {
  CounterRng rng(23);
  for (int k = 0; k < 300; ++k) {
    const Index M = 1 + static_cast<Index>(rng.below(6));
    const Index C = 1 + static_cast<Index>(rng.below(5));
    const Eigen::MatrixXd A = testing::random_matrix(rng, M, C);
    const Eigen::MatrixXd B = testing::random_matrix(rng, M, C);
    const double theta = rng.uniform();
    const double mixed = exclusivity_regularizer(theta * A + (1.0 - theta) * B);
    CHECK(mixed <= theta * exclusivity_regularizer(A) + (1.0 - theta) * exclusivity_regularizer(B) + 1e-9);
  }
}
