#include <cmath>

#include "doctest.h"
#include "grassfusion/synth.hpp"

using namespace gf;

TEST_CASE("generate_union: shapes, block labels, and per-cluster rank") {
  const GroundTruth gt = generate_union(10, 2, 3, 8, 42);
  CHECK(gt.full_matrix.rows() == 10);
  CHECK(gt.full_matrix.cols() == 24);
  REQUIRE(gt.bases.size() == 3);
  REQUIRE(gt.coefficients.size() == 3);
  CHECK(gt.labels.k == 3);
  REQUIRE(gt.labels.labels.size() == 24);
  for (int c = 0; c < 3; ++c) {
    const StiefelPoint& B = gt.bases[static_cast<std::size_t>(c)];
    CHECK(B.m() == 10);
    CHECK(B.r() == 2);
    CHECK((B.basis.transpose() * B.basis - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK(gt.coefficients[static_cast<std::size_t>(c)].rows() == 2);
    CHECK(gt.coefficients[static_cast<std::size_t>(c)].cols() == 8);
    for (int t = 0; t < 8; ++t) CHECK(gt.labels.labels[static_cast<std::size_t>(8 * c + t)] == c);
    // the block reproduces basis * coefficients
    CHECK((gt.full_matrix.middleCols(8 * c, 8) -
           B.basis * gt.coefficients[static_cast<std::size_t>(c)])
              .norm() < 1e-12);
  }
  // distinct clusters span distinct subspaces
  CHECK(geodesic_distance(gt.bases[0], gt.bases[1]) > 0.1);
  // deterministic in the seed, decorrelated across seeds
  const GroundTruth again = generate_union(10, 2, 3, 8, 42);
  CHECK((again.full_matrix - gt.full_matrix).norm() == 0.0);
  const GroundTruth other = generate_union(10, 2, 3, 8, 43);
  CHECK((other.full_matrix - gt.full_matrix).norm() > 1e-6);
}

TEST_CASE("generate_union validates parameters") {
  CHECK_THROWS_AS(static_cast<void>(generate_union(2, 3, 1, 5, 0)), ParameterError);
  CHECK_THROWS_AS(static_cast<void>(generate_union(5, 0, 1, 5, 0)), ParameterError);
  CHECK_THROWS_AS(static_cast<void>(generate_union(5, 2, 0, 5, 0)), ParameterError);
  CHECK_THROWS_AS(static_cast<void>(generate_union(5, 2, 1, 0, 0)), ParameterError);
}

TEST_CASE("apply_mask: Bernoulli fraction, determinism, and full observation") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(60, 50, 1.0);
  const MaskedMatrix M = apply_mask(X, 0.5, 7);
  CHECK(M.rows() == 60);
  CHECK(M.cols() == 50);
  double frac = 0;
  for (Eigen::Index j = 0; j < 50; ++j)
    for (Eigen::Index i = 0; i < 60; ++i)
      if (M.mask(i, j)) frac += 1;
  frac /= 3000.0;
  CHECK(frac == doctest::Approx(0.5).epsilon(0.06));
  CHECK((M.values - X).norm() == 0.0);  // values carried through unchanged

  const MaskedMatrix again = apply_mask(X, 0.5, 7);
  CHECK((M.mask.cast<double>() - again.mask.cast<double>()).norm() == 0.0);
  const MaskedMatrix other = apply_mask(X, 0.5, 8);
  CHECK((M.mask.cast<double>() - other.mask.cast<double>()).norm() > 0.0);

  const MaskedMatrix full = apply_mask(X, 1.0, 7);
  CHECK(full.mask.cast<int>().sum() == 3000);

  CHECK_THROWS_AS(static_cast<void>(apply_mask(X, 0.0, 7)), ParameterError);
  CHECK_THROWS_AS(static_cast<void>(apply_mask(X, 1.5, 7)), ParameterError);
}

TEST_CASE("add_noise: scale, determinism, and the zero-sigma identity") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(40, 40);
  const Eigen::MatrixXd N = add_noise(X, 0.1, 9);
  const double sample_sd = std::sqrt(N.squaredNorm() / 1600.0);
  CHECK(sample_sd == doctest::Approx(0.1).epsilon(0.08));
  CHECK((add_noise(X, 0.1, 9) - N).norm() == 0.0);
  CHECK((add_noise(X, 0.0, 9) - X).norm() == 0.0);
  CHECK_THROWS_AS(static_cast<void>(add_noise(X, -0.1, 9)), ParameterError);
}

TEST_CASE("sampling_limit matches (r+1)/min(m,n)") {
  CHECK(sampling_limit(2, 50, 60) == doctest::Approx(3.0 / 50.0).epsilon(1e-15));
  CHECK(sampling_limit(2, 100, 60) == doctest::Approx(3.0 / 60.0).epsilon(1e-15));
  CHECK(sampling_limit(1, 5, 5) == doctest::Approx(2.0 / 5.0).epsilon(1e-15));
}
