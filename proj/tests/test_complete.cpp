#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "grassfusion/complete.hpp"
#include "grassfusion/synth.hpp"

using namespace gf;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.normal();
  return M;
}

MaskedMatrix fully_observed(const Eigen::MatrixXd& X) {
  MaskedMatrix M;
  M.values = X;
  M.mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(X.rows(), X.cols(), true);
  return M;
}

// Rank-1 ground truth a b^T with a structured mask.
MaskedMatrix rank1_masked(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const std::vector<std::pair<Eigen::Index, Eigen::Index>>& holes) {
  MaskedMatrix M = fully_observed(a * b.transpose());
  for (auto [i, j] : holes) M.mask(i, j) = false;
  return M;
}

double max_abs_error(const Eigen::MatrixXd& completed, const Eigen::MatrixXd& truth) {
  return (completed - truth).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("observed_column extracts values and ascending indices") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 5,
       2, 6,
       3, 7,
       4, 8;
  MaskedMatrix M = fully_observed(X);
  M.mask(1, 0) = false;
  M.mask(3, 0) = false;
  const ObservedVector x = observed_column(M, 0);
  CHECK(x.m == 4);
  REQUIRE(x.omega.size() == 2);
  CHECK(x.omega[0] == 0);
  CHECK(x.omega[1] == 2);
  CHECK(x.values[0] == 1.0);
  CHECK(x.values[1] == 3.0);
  const ObservedVector y = observed_column(M, 1);
  CHECK(y.omega.size() == 4);
  CHECK(y.values[3] == 8.0);
}

TEST_CASE("lrmc_als completes a rank-1 matrix exactly through holes") {
  RngStream rng(40, "als");
  Eigen::VectorXd a = gaussian(5, 1, rng).col(0);
  Eigen::VectorXd b = gaussian(6, 1, rng).col(0);
  const Eigen::MatrixXd truth = a * b.transpose();
  const MaskedMatrix M = rank1_masked(a, b, {{0, 0}, {2, 3}, {4, 5}, {1, 2}});
  auto [completed, basis] = lrmc_als(M, 1, 1e-12, 500, 9);
  CHECK(max_abs_error(completed, truth) < 1e-8);
  // column space is span(a)
  const double cosang = std::abs(basis.basis.col(0).dot(a.normalized()));
  CHECK(cosang == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("lrmc_als completes a rank-2 matrix exactly") {
  RngStream rng(41, "als2");
  const Eigen::MatrixXd A = gaussian(8, 2, rng);
  const Eigen::MatrixXd B = gaussian(2, 10, rng);
  const Eigen::MatrixXd truth = A * B;
  MaskedMatrix M = fully_observed(truth);
  // drop ~25% of entries, keeping the preconditions comfortable
  for (Eigen::Index j = 0; j < 10; ++j)
    for (Eigen::Index i = 0; i < 8; ++i)
      if (rng.uniform() < 0.25) M.mask(i, j) = false;
  for (Eigen::Index j = 0; j < 10; ++j) M.mask(j % 8, j) = true;
  auto [completed, basis] = lrmc_als(M, 2, 1e-13, 1000, 3);
  CHECK((completed - truth).norm() < 1e-6 * truth.norm());
  CHECK(basis.r() == 2);
}

TEST_CASE("lrmc_als names an underdetermined column") {
  RngStream rng(42, "und");
  Eigen::VectorXd a = gaussian(4, 1, rng).col(0);
  Eigen::VectorXd b = gaussian(4, 1, rng).col(0);
  MaskedMatrix M = fully_observed(a * b.transpose());
  for (Eigen::Index i = 0; i < 4; ++i) M.mask(i, 2) = false;  // column 2 fully hidden
  CHECK_THROWS_WITH_AS(static_cast<void>(lrmc_als(M, 1, 1e-10, 100, 0)),
                       doctest::Contains("column 2"), UnderdeterminedError);
}

TEST_CASE("lrmc_als zeroes rows with no observations") {
  RngStream rng(43, "zrow");
  Eigen::VectorXd a = gaussian(5, 1, rng).col(0);
  Eigen::VectorXd b = gaussian(5, 1, rng).col(0);
  MaskedMatrix M = fully_observed(a * b.transpose());
  for (Eigen::Index j = 0; j < 5; ++j) M.mask(3, j) = false;  // row 3 fully hidden
  auto [completed, basis] = lrmc_als(M, 1, 1e-12, 500, 1);
  (void)basis;
  CHECK(completed.row(3).norm() == 0.0);
  // remaining rows still fit the observed entries
  for (Eigen::Index j = 0; j < 5; ++j)
    for (Eigen::Index i = 0; i < 5; ++i)
      if (M.mask(i, j)) CHECK(completed(i, j) == doctest::Approx(a[i] * b[j]).epsilon(1e-7));
}

TEST_CASE("identify_subspace recovers the column space and flags deficiency") {
  RngStream rng(44, "id");
  const Eigen::MatrixXd A = gaussian(7, 2, rng);
  const Eigen::MatrixXd C = A * gaussian(2, 12, rng);
  const SubspaceEstimate sub = identify_subspace(C, 2);
  CHECK(!sub.rank_deficient);
  CHECK(sub.basis.m() == 7);
  CHECK(sub.basis.r() == 2);
  // span matches A's column space
  const StiefelPoint truth = orthonormalize(A);
  CHECK(geodesic_distance(sub.basis, truth) < 1e-8);

  // rank-1 data asked for rank 2: flagged, still orthonormal
  const Eigen::MatrixXd R1 = A.col(0) * gaussian(1, 12, rng);
  const SubspaceEstimate thin = identify_subspace(R1, 2);
  CHECK(thin.rank_deficient);
  CHECK((thin.basis.basis.transpose() * thin.basis.basis - Eigen::MatrixXd::Identity(2, 2))
            .norm() < 1e-10);
}

TEST_CASE("project_coefficients solves the observed least squares") {
  RngStream rng(45, "proj");
  const StiefelPoint U = orthonormalize(gaussian(8, 2, rng));
  Eigen::VectorXd theta_true(2);
  theta_true << 1.5, -0.5;
  const Eigen::VectorXd full = U.basis * theta_true;

  ObservedVector x;
  x.m = 8;
  x.omega = {0, 2, 3, 5, 7};
  x.values.resize(5);
  for (int t = 0; t < 5; ++t) x.values[t] = full[x.omega[static_cast<std::size_t>(t)]];

  SubspaceEstimate sub;
  sub.basis = U;
  const Coefficients got = project_coefficients(x, sub);
  CHECK((got.theta - theta_true).norm() < 1e-10);

  const Eigen::VectorXd rebuilt = complete_point(got, sub);
  CHECK((rebuilt - full).norm() < 1e-10);
}

TEST_CASE("project_coefficients rejects too few observations") {
  RngStream rng(46, "projerr");
  SubspaceEstimate sub;
  sub.basis = orthonormalize(gaussian(6, 3, rng));
  ObservedVector x;
  x.m = 6;
  x.omega = {1, 4};  // 2 < r = 3
  x.values = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(static_cast<void>(project_coefficients(x, sub)), UnderdeterminedError);
}

TEST_CASE("assign_point picks the lowest-residual subspace and applies the threshold") {
  RngStream rng(47, "assign");
  std::vector<SubspaceEstimate> subs(2);
  subs[0].basis = orthonormalize(gaussian(10, 2, rng));
  subs[0].cluster_id = 0;
  subs[1].basis = orthonormalize(gaussian(10, 2, rng));
  subs[1].cluster_id = 1;

  Eigen::VectorXd in_second = subs[1].basis.basis * gaussian(2, 1, rng).col(0);
  ObservedVector x;
  x.m = 10;
  for (Eigen::Index i = 0; i < 10; ++i) x.omega.push_back(i);
  x.values = in_second;

  const Assignment hit = assign_point(x, subs, 0.3);
  CHECK(hit.assigned);
  CHECK(hit.label == 1);
  CHECK(hit.residual < 1e-10);

  // a direction orthogonal to both spans exceeds any sane threshold
  Eigen::VectorXd stray = gaussian(10, 1, rng).col(0);
  for (const auto& s : subs) stray -= s.basis.basis * (s.basis.basis.transpose() * stray);
  ObservedVector xs = x;
  xs.values = stray;
  const Assignment miss = assign_point(xs, subs, 0.3);
  CHECK(!miss.assigned);
  CHECK(miss.residual > 0.3);
  CHECK(miss.label != -1);  // still reports the best candidate
}

TEST_CASE("sketch_select keeps the most observed rows and a seeded column sample") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 6);
  MaskedMatrix M = fully_observed(X);
  // row observation counts: row0 = 6, row1 = 2, row2 = 4, row3 = 4
  for (Eigen::Index j = 0; j < 4; ++j) M.mask(1, j) = false;
  for (Eigen::Index j = 0; j < 2; ++j) {
    M.mask(2, j) = false;
    M.mask(3, j + 2) = false;
  }

  const Sketch s = sketch_select(M, 3, 2, 5);
  REQUIRE(s.rows.size() == 2);
  CHECK(s.rows[0] == 0);
  CHECK(s.rows[1] == 2);  // tie between rows 2 and 3 goes to the lower index
  REQUIRE(s.cols.size() == 3);
  CHECK(std::is_sorted(s.cols.begin(), s.cols.end()));
  CHECK(s.sub.rows() == 2);
  CHECK(s.sub.cols() == 3);
  // the sub-matrix mask agrees with the source
  for (std::size_t a = 0; a < s.rows.size(); ++a)
    for (std::size_t b = 0; b < s.cols.size(); ++b)
      CHECK(s.sub.mask(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) ==
            M.mask(s.rows[a], s.cols[b]));

  // deterministic in the seed
  const Sketch again = sketch_select(M, 3, 2, 5);
  CHECK(again.cols == s.cols);
  // full-size arguments keep everything; zero is rejected (the pipeline skips
  // the sketch stage instead of passing 0 through)
  const Sketch all = sketch_select(M, 6, 4, 5);
  CHECK(all.rows.size() == 4);
  CHECK(all.cols.size() == 6);
  CHECK_THROWS_AS(static_cast<void>(sketch_select(M, 0, 4, 5)), ParameterError);
}

TEST_CASE("pipeline recovers a fully observed union of lines") {
  const GroundTruth gt = generate_union(8, 1, 2, 10, 77);
  const MaskedMatrix M = fully_observed(gt.full_matrix);
  PipelineConfig cfg;
  cfg.k = 2;
  cfg.opt.max_iters = 2000;
  cfg.seed = 77;
  const PipelineResult res = hrmc_pipeline(M, 1, 1e-3, cfg);
  CHECK(res.labels.k == 2);
  CHECK(clustering_error(res.labels, gt.labels) == 0.0);
  CHECK((res.completed - gt.full_matrix).norm() < 1e-6 * gt.full_matrix.norm());
  CHECK(res.unassigned.empty());
  REQUIRE(res.subspaces.size() == 2);
  CHECK(res.rows.size() == 8);
  CHECK(res.solved_cols.size() == 20);
}

TEST_CASE("pipeline with a column sketch assigns held-out columns") {
  const GroundTruth gt = generate_union(12, 1, 2, 20, 3);
  const MaskedMatrix M = fully_observed(gt.full_matrix);
  PipelineConfig cfg;
  cfg.k = 2;
  cfg.n_prime = 16;  // solve on 16 of 40 columns
  cfg.opt.max_iters = 2000;
  cfg.seed = 3;
  const PipelineResult res = hrmc_pipeline(M, 1, 1e-3, cfg);
  CHECK(res.solved_cols.size() == 16);
  CHECK(res.labels.labels.size() == 40);
  CHECK(clustering_error(res.labels, gt.labels) == 0.0);
  CHECK((res.completed - gt.full_matrix).norm() < 1e-6 * gt.full_matrix.norm());
}

TEST_CASE("rank_sweep explains homogeneous data at its true rank") {
  RngStream rng(48, "sweep");
  PipelineConfig cfg;
  cfg.k = 1;
  cfg.opt.max_iters = 300;
  cfg.seed = 11;

  SUBCASE("rank-1 data is claimed in one pass") {
    const Eigen::MatrixXd X = gaussian(7, 1, rng) * gaussian(1, 10, rng);
    const auto entries = rank_sweep(fully_observed(X), 3, 1e-4, cfg, 1e-6);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].r == 1);
    CHECK(entries[0].explained.size() == 10);
  }
  SUBCASE("rank-2 data survives the rank-1 stage untouched") {
    const Eigen::MatrixXd X = gaussian(7, 2, rng) * gaussian(2, 10, rng);
    const auto entries = rank_sweep(fully_observed(X), 2, 1e-4, cfg, 1e-6);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].r == 2);
    CHECK(entries[0].explained.size() == 10);
  }
}

TEST_CASE("rank_sweep splits a line from an orthogonal near-degenerate plane") {
  RngStream rng(49, "sweep2");
  // columns 0..11 on span(e0); columns 12..23 in span(e3, e4), rank 2 but with
  // directions so tight the blob clusters as one point
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(9, 24);
  for (Eigen::Index j = 0; j < 12; ++j) X(0, j) = 1.0 + rng.uniform();
  for (Eigen::Index j = 12; j < 24; ++j) {
    const double scale = 1.0 + rng.uniform();
    X(3, j) = scale * (1.0 + 0.1 * rng.normal());
    X(4, j) = scale * 0.05 * rng.normal();
  }

  PipelineConfig cfg;
  cfg.k = 2;
  cfg.opt.max_iters = 300;
  cfg.seed = 21;
  const auto entries = rank_sweep(fully_observed(X), 2, 1e-4, cfg, 1e-6);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].r == 1);
  REQUIRE(entries[0].explained.size() == 12);
  for (Eigen::Index c : entries[0].explained) CHECK(c < 12);
  CHECK(entries[1].r == 2);
  REQUIRE(entries[1].explained.size() == 12);
  for (Eigen::Index c : entries[1].explained) CHECK(c >= 12);
}
