#include "grassfusion/synth.hpp"

#include <string>

#include "grassfusion/rng.hpp"

namespace gf {

GroundTruth generate_union(Eigen::Index m, Eigen::Index r, Eigen::Index K,
                           Eigen::Index n_per_cluster, std::uint64_t seed) {
  if (m < r || r < 1) throw ParameterError("generate_union: need m >= r >= 1");
  if (K < 1 || n_per_cluster < 1)
    throw ParameterError("generate_union: need K >= 1 and n_per_cluster >= 1");
  GroundTruth gt;
  const Eigen::Index n = K * n_per_cluster;
  gt.full_matrix.resize(m, n);
  gt.labels.labels.resize(static_cast<std::size_t>(n));
  gt.labels.k = static_cast<int>(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    RngStream base_rng(seed, "bases/" + std::to_string(k));
    StiefelPoint basis;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd raw(m, r);
      for (Eigen::Index j = 0; j < r; ++j)
        for (Eigen::Index i = 0; i < m; ++i) raw(i, j) = base_rng.normal();
      try {
        basis = orthonormalize(raw);
        break;
      } catch (const DegenerateInputError&) {
        if (attempt >= 100)
          throw DegenerateInputError("generate_union: repeated degenerate draws");
      }
    }
    RngStream coef_rng(seed, "coeffs/" + std::to_string(k));
    Eigen::MatrixXd theta(r, n_per_cluster);
    for (Eigen::Index j = 0; j < n_per_cluster; ++j)
      for (Eigen::Index i = 0; i < r; ++i) theta(i, j) = coef_rng.normal();
    gt.full_matrix.middleCols(k * n_per_cluster, n_per_cluster) = basis.basis * theta;
    for (Eigen::Index j = 0; j < n_per_cluster; ++j)
      gt.labels.labels[static_cast<std::size_t>(k * n_per_cluster + j)] = static_cast<int>(k);
    gt.bases.push_back(std::move(basis));
    gt.coefficients.push_back(std::move(theta));
  }
  return gt;
}

MaskedMatrix apply_mask(const Eigen::MatrixXd& X, double p, std::uint64_t seed) {
  if (!(p > 0.0) || p > 1.0) throw ParameterError("apply_mask: need 0 < p <= 1");
  MaskedMatrix out;
  out.values = X;
  out.mask.resize(X.rows(), X.cols());
  RngStream rng(seed, "mask");
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i) out.mask(i, j) = rng.uniform() < p;
  return out;
}

Eigen::MatrixXd add_noise(const Eigen::MatrixXd& X, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw ParameterError("add_noise: sigma must be nonnegative");
  if (sigma == 0) return X;
  Eigen::MatrixXd out = X;
  RngStream rng(seed, "noise");
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, j) += sigma * rng.normal();
  return out;
}

double sampling_limit(Eigen::Index r, Eigen::Index m, Eigen::Index n) {
  if (r < 1 || m < 1 || n < 1) throw ParameterError("sampling_limit: positive arguments only");
  return static_cast<double>(r + 1) / static_cast<double>(std::min(m, n));
}

}  // namespace gf
