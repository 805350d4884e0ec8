#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "grassfusion/cluster.hpp"
#include "grassfusion/complete.hpp"
#include "grassfusion/manifold.hpp"

namespace gf {

struct GroundTruth {
  std::vector<StiefelPoint> bases;             // K orthonormal m x r bases
  std::vector<Eigen::MatrixXd> coefficients;   // K matrices r x n_k
  Labeling labels;                             // n true labels, block order
  Eigen::MatrixXd full_matrix;                 // m x n concatenation
};

// Union of K random r-dimensional subspaces with n_per_cluster Gaussian
// columns each; bases are orthonormalized Gaussian draws.
GroundTruth generate_union(Eigen::Index m, Eigen::Index r, Eigen::Index K,
                           Eigen::Index n_per_cluster, std::uint64_t seed);

// Independent Bernoulli(p) observation of every entry.
MaskedMatrix apply_mask(const Eigen::MatrixXd& X, double p, std::uint64_t seed);

Eigen::MatrixXd add_noise(const Eigen::MatrixXd& X, double sigma, std::uint64_t seed);

// Information-theoretic sampling limit p* = (r+1)/min(m,n).
double sampling_limit(Eigen::Index r, Eigen::Index m, Eigen::Index n);

}  // namespace gf
