#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "grassfusion/cluster.hpp"
#include "grassfusion/objective.hpp"

namespace gf {

// Partially observed data matrix, columns are samples. Values at unobserved
// positions are ignored by every operation.
struct MaskedMatrix {
  Eigen::MatrixXd values;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

struct SubspaceEstimate {
  StiefelPoint basis;
  int cluster_id = -1;
  bool rank_deficient = false;
};

struct Coefficients {
  Eigen::VectorXd theta;
};

ObservedVector observed_column(const MaskedMatrix& X, Eigen::Index j);

// Factored rank-r alternating least squares on the observed entries.
// Returns the completed matrix A*B and the orthonormal column space of A.
// The observed-entry residual is non-increasing across sweeps.
std::pair<Eigen::MatrixXd, StiefelPoint> lrmc_als(const MaskedMatrix& cluster, Eigen::Index r,
                                                  double tol, int max_iters, std::uint64_t seed);

// Top-r left singular vectors of a completed cluster.
SubspaceEstimate identify_subspace(const Eigen::MatrixXd& completed, Eigen::Index r);

// Least-squares coefficients of x^Omega against the rows of the basis
// restricted to Omega.
Coefficients project_coefficients(const ObservedVector& x, const SubspaceEstimate& sub);

struct Assignment {
  int label = -1;        // best subspace by relative observed residual
  double residual = 0;   // that residual
  bool assigned = false; // false when the residual exceeds the threshold
};

Assignment assign_point(const ObservedVector& x, const std::vector<SubspaceEstimate>& subs,
                        double residual_threshold);

Eigen::VectorXd complete_point(const Coefficients& theta, const SubspaceEstimate& sub);

struct Sketch {
  MaskedMatrix sub;
  std::vector<Eigen::Index> rows;  // selected row indices, ascending
  std::vector<Eigen::Index> cols;  // selected column indices, ascending
};

// Keeps the m' rows with the most observations (ties to the lowest index)
// and a seeded uniform sample of n' columns.
Sketch sketch_select(const MaskedMatrix& X, Eigen::Index n_prime, Eigen::Index m_prime,
                     std::uint64_t seed);

struct PipelineConfig {
  OptimizeSettings opt;
  int k = 0;                      // 0 = eigengap estimate
  double bandwidth = 0;           // <= 0 = median heuristic
  int k_max = 10;
  Eigen::Index n_prime = 0;       // 0 = no column sketch
  Eigen::Index m_prime = 0;       // 0 = no row sketch
  double residual_threshold = 0.3;
  bool refine_unassigned = false;
  double als_tol = 1e-10;
  int als_max_iters = 500;
  std::uint64_t seed = 0;
};

struct PipelineResult {
  Labeling labels;                        // all n columns
  Eigen::MatrixXd completed;              // |rows| x n
  std::vector<SubspaceEstimate> subspaces;
  OptimizationTrace trace;
  std::vector<Eigen::Index> rows;         // kept rows (all rows when unsketched)
  std::vector<Eigen::Index> solved_cols;  // columns used to solve the objective
  std::vector<Eigen::Index> unassigned;   // held-out columns beyond the residual threshold
};

// End-to-end: (optional sketch) -> completion bases -> proxies -> descent ->
// distances -> affinity -> spectral clustering -> per-cluster ALS -> subspace
// SVD -> residual assignment and completion of held-out columns.
PipelineResult hrmc_pipeline(const MaskedMatrix& X, Eigen::Index r, double lambda,
                             const PipelineConfig& cfg);

struct RankSweepEntry {
  Eigen::Index r = 0;
  std::vector<Eigen::Index> explained;  // original column indices
};

// Increase r from 1 to r_max, running the pipeline and pruning the columns
// whose relative observed residual falls at or below fit_threshold.
std::vector<RankSweepEntry> rank_sweep(const MaskedMatrix& X, Eigen::Index r_max, double lambda,
                                       const PipelineConfig& cfg, double fit_threshold = 1e-3);

}  // namespace gf
