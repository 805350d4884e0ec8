#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "grassfusion/objective.hpp"

namespace gf {

// Pairwise geodesic distances: symmetric, zero diagonal, entries in
// [0, sqrt(r) * pi/2].
struct DistanceMatrix {
  Eigen::MatrixXd entries;
};

struct Labeling {
  std::vector<int> labels;  // values in {0, ..., k-1}, every cluster nonempty
  int k = 0;
};

DistanceMatrix distance_matrix(const ProxyEnsemble& ens, int threads = 1);

// Gaussian kernel exp(-d^2 / (2 s^2)) with unit diagonal; bandwidth <= 0
// selects the median of the positive off-diagonal distances (1 when all
// distances vanish).
Eigen::MatrixXd affinity(const DistanceMatrix& D, double bandwidth = 0.0);

// argmax_k (lambda_{k+1} - lambda_k) over 1 <= k < min(n, k_max), ascending
// eigenvalues of the symmetric normalized Laplacian.
int estimate_k_eigengap(const Eigen::MatrixXd& A, int k_max = 10);

// Normalized-Laplacian spectral clustering: k smallest eigenvectors,
// row-normalized, then k-means with 10 seeded restarts (300 iterations each,
// best inertia wins, ties to the lowest restart index). k = 0 selects k by
// the eigengap heuristic.
Labeling spectral_cluster(const Eigen::MatrixXd& A, int k, std::uint64_t seed, int k_max = 10);

// min over injective label maps of the mismatch fraction, via optimal
// assignment on the confusion matrix.
double clustering_error(const Labeling& yhat, const Labeling& y);

// Exact maximum-weight assignment on a square cost matrix (Hungarian
// algorithm); exposed for reuse in subspace matching.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight);

}  // namespace gf
