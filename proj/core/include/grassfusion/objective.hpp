#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "grassfusion/manifold.hpp"
#include "grassfusion/rng.hpp"

namespace gf {

// Partially observed column: values at the (strictly increasing) row indices
// omega of an ambient m-vector.
struct ObservedVector {
  Eigen::VectorXd values;
  std::vector<Eigen::Index> omega;
  Eigen::Index m = 0;
};

// Orthonormal basis of the span of all scalar multiples of completions of an
// observed vector: the normalized zero-padded observation followed by the
// canonical vectors of the unobserved rows (identity when the observed part
// is empty or all zero).
struct CompletionBasis {
  Eigen::MatrixXd basis;
};

struct ProxyEnsemble {
  std::vector<StiefelPoint> proxies;
  std::vector<CompletionBasis> bases;  // aligned with proxies
  double lambda = 1e-5;

  Eigen::Index size() const { return static_cast<Eigen::Index>(proxies.size()); }
};

struct ObjectiveValue {
  double total = 0;         // chordal_sum + lambda/2 * geodesic_sum
  double chordal_sum = 0;   // sum_i d_c^2
  double geodesic_sum = 0;  // sum over ordered pairs (i,j) of d_g^2
};

struct GradientStack {
  std::vector<TangentVector> tangents;
  double norm = 0;  // Frobenius norm of the stacked tangents
};

struct TraceRow {
  int iteration = 0;
  double objective = 0;
  double chordal_sum = 0;
  double geodesic_sum = 0;
  double grad_norm = 0;
  double eta = 0;
};

enum class StopReason { grad_tol, line_search_stall, relative_decrease, max_iters };

const char* to_string(StopReason reason);

struct OptimizationTrace {
  std::vector<TraceRow> rows;
  StopReason reason = StopReason::max_iters;
};

struct OptimizeSettings {
  double eta0 = 1.0;
  double beta = 0.5;
  double gamma = 1e-4;
  double grad_tol = 1e-6;
  int max_iters = 10000;
  int max_backtracks = 50;
  int threads = 1;
};

CompletionBasis build_completion_basis(const ObservedVector& x);

// First basis direction is the normalized zero-padded x (when x is nonzero),
// remaining directions are seeded Gaussian draws, orthonormalized; the chordal
// residual of the result is zero by construction.
StiefelPoint init_proxy(const ObservedVector& x, Eigen::Index r, RngStream& rng);

ObjectiveValue objective_value(const ProxyEnsemble& ens, int threads = 1);

// Gradient of d_c^2 at U: -2 sigma_1 (I - U U^T) v w^T with v, w the leading
// singular vectors of X0 X0^T U; zero tangent at the minimum.
TangentVector chordal_gradient(const CompletionBasis& X0, const StiefelPoint& U);

// Gradient of d_g^2(Ui, Uj) with respect to Ui.
TangentVector geodesic_gradient(const StiefelPoint& Ui, const StiefelPoint& Uj);

// tangents[i] = chordal_gradient(bases[i], U_i) + lambda * sum_{j != i}
// geodesic_gradient(U_i, U_j): each unordered pair appears twice in the
// double sum of the objective, so with the lambda/2 prefactor every ordered
// pair contributes lambda times the pair gradient. Accumulation order is
// ascending j for every i, independent of thread count.
GradientStack total_gradient(const ProxyEnsemble& ens, int threads = 1);

struct ArmijoResult {
  ProxyEnsemble ens;
  ObjectiveValue value;
  double eta = 0;
  int nu = 0;
  bool stalled = false;
};

// Backtracking line search on the product manifold: smallest nu with
//   f(ens) - f(step(ens, beta^nu * eta0)) >= gamma * beta^nu * eta0 * ||grad||^2,
// stepping every proxy simultaneously along -tangents[i]. A stall (backtrack
// budget exhausted) leaves the ensemble unchanged and is treated by callers
// as a convergence signal.
ArmijoResult armijo_step(const ProxyEnsemble& ens, const GradientStack& grad, double eta0,
                         double beta, double gamma, int max_backtracks, int threads = 1,
                         const ObjectiveValue* f0 = nullptr);

std::pair<ProxyEnsemble, OptimizationTrace> optimize(ProxyEnsemble ens,
                                                     const OptimizeSettings& settings);

}  // namespace gf
