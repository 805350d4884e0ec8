#include "grassfusion/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grassfusion/parallel.hpp"

namespace gf {

namespace {

void validate_observed(const ObservedVector& x) {
  if (static_cast<Eigen::Index>(x.omega.size()) != x.values.size())
    throw ShapeError("ObservedVector: |values| != |omega|");
  for (std::size_t t = 0; t < x.omega.size(); ++t) {
    if (x.omega[t] < 0 || x.omega[t] >= x.m)
      throw ParameterError("ObservedVector: omega entry out of range");
    if (t > 0 && x.omega[t] <= x.omega[t - 1])
      throw ParameterError("ObservedVector: omega must be strictly increasing");
  }
}

Eigen::VectorXd padded(const ObservedVector& x) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(x.m);
  for (std::size_t t = 0; t < x.omega.size(); ++t) full(x.omega[t]) = x.values(t);
  return full;
}

// d_g^2 between two bases from the singular values of Ui^T Uj
double pair_geodesic_sq(const Eigen::MatrixXd& Bi, const Eigen::MatrixXd& Bj) {
  Eigen::VectorXd s;
  if (Bi.cols() == 2 && Bj.cols() == 2) {
    const Eigen::Matrix2d C = Bi.transpose() * Bj;
    s = Eigen::JacobiSVD<Eigen::Matrix2d>(C).singularValues();
  } else {
    s = Eigen::JacobiSVD<Eigen::MatrixXd>(Bi.transpose() * Bj).singularValues();
  }
  s = s.cwiseMin(1.0).cwiseMax(0.0);
  return s.array().acos().square().sum();
}

// full SVD of the r x r inner-product matrix, fixed-size path for r = 2
void pair_svd(const Eigen::MatrixXd& C, Eigen::MatrixXd& P, Eigen::MatrixXd& Q,
              Eigen::VectorXd& s) {
  if (C.rows() == 2 && C.cols() == 2) {
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(Eigen::Matrix2d(C),
                                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    P = svd.matrixU();
    Q = svd.matrixV();
    s = svd.singularValues();
  } else {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    P = svd.matrixU();
    Q = svd.matrixV();
    s = svd.singularValues();
  }
  s = s.cwiseMin(1.0).cwiseMax(0.0);
}

// c_l = 2 arccos(s_l)/sqrt(1 - s_l^2) with its analytic limit 2 at s -> 1
Eigen::VectorXd arccos_coeffs(const Eigen::VectorXd& s) {
  Eigen::VectorXd c(s.size());
  for (Eigen::Index l = 0; l < s.size(); ++l)
    c(l) = s(l) > 1.0 - 1e-9 ? 2.0 : 2.0 * std::acos(s(l)) / std::sqrt(1.0 - s(l) * s(l));
  return c;
}

}  // namespace

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::grad_tol: return "grad_tol";
    case StopReason::line_search_stall: return "line_search_stall";
    case StopReason::relative_decrease: return "relative_decrease";
    case StopReason::max_iters: return "max_iters";
  }
  return "unknown";
}

CompletionBasis build_completion_basis(const ObservedVector& x) {
  validate_observed(x);
  const Eigen::Index m = x.m;
  if (x.omega.empty() || x.values.norm() == 0.0)
    return {Eigen::MatrixXd::Identity(m, m)};
  const Eigen::Index q = m - static_cast<Eigen::Index>(x.omega.size());
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(m, q + 1);
  basis.col(0) = padded(x).normalized();
  std::vector<bool> observed(m, false);
  for (Eigen::Index idx : x.omega) observed[static_cast<std::size_t>(idx)] = true;
  Eigen::Index col = 1;
  for (Eigen::Index row = 0; row < m; ++row)
    if (!observed[static_cast<std::size_t>(row)]) basis(row, col++) = 1.0;
  return {std::move(basis)};
}

StiefelPoint init_proxy(const ObservedVector& x, Eigen::Index r, RngStream& rng) {
  validate_observed(x);
  if (r > x.m || r < 1)
    throw ParameterError("init_proxy: need 1 <= r <= m, got r = " + std::to_string(r));
  const bool has_data = !x.omega.empty() && x.values.norm() > 0.0;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd raw(x.m, r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < x.m; ++i) raw(i, j) = rng.normal();
    if (has_data) raw.col(0) = padded(x);
    try {
      return orthonormalize(raw);
    } catch (const DegenerateInputError&) {
      // probability-zero collision; redraw
    }
  }
  throw DegenerateInputError("init_proxy: repeated degenerate random draws");
}

ObjectiveValue objective_value(const ProxyEnsemble& ens, int threads) {
  const Eigen::Index n = ens.size();
  if (n == 0 || static_cast<Eigen::Index>(ens.bases.size()) != n)
    throw ParameterError("objective_value: ensemble proxies/bases misaligned");
  std::vector<double> chordal(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](std::int64_t i) {
    chordal[static_cast<std::size_t>(i)] =
        chordal_residual(ens.bases[static_cast<std::size_t>(i)].basis,
                         ens.proxies[static_cast<std::size_t>(i)]);
  });
  // one entry per unordered pair, accumulated in fixed order below
  const Eigen::Index npairs = n * (n - 1) / 2;
  std::vector<double> pair_sq(static_cast<std::size_t>(std::max<Eigen::Index>(npairs, 0)));
  parallel_for(npairs, threads, [&](std::int64_t t) {
    // unflatten t -> (i, j), i < j
    Eigen::Index i = 0, rem = static_cast<Eigen::Index>(t);
    while (rem >= n - 1 - i) {
      rem -= n - 1 - i;
      ++i;
    }
    const Eigen::Index j = i + 1 + rem;
    pair_sq[static_cast<std::size_t>(t)] =
        pair_geodesic_sq(ens.proxies[static_cast<std::size_t>(i)].basis,
                         ens.proxies[static_cast<std::size_t>(j)].basis);
  });
  ObjectiveValue out;
  for (double c : chordal) out.chordal_sum += c;
  double half = 0;
  for (double g : pair_sq) half += g;
  out.geodesic_sum = 2.0 * half;  // ordered double sum; i = j terms are zero
  out.total = out.chordal_sum + 0.5 * ens.lambda * out.geodesic_sum;
  return out;
}

TangentVector chordal_gradient(const CompletionBasis& X0, const StiefelPoint& U) {
  if (X0.basis.rows() != U.m())
    throw ShapeError("chordal_gradient: ambient dimension mismatch");
  Eigen::MatrixXd B = X0.basis.transpose() * U.basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s1 = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  if (s1 > 1.0 - 1e-12)  // at the minimum of the term
    return {Eigen::MatrixXd::Zero(U.m(), U.r())};
  const Eigen::VectorXd p1 = svd.matrixU().col(0);
  const Eigen::VectorXd q1 = svd.matrixV().col(0);
  // v = X0 p1 is the leading left singular vector of X0 X0^T U and
  // (I - U U^T) v = v - s1 * U q1 since U^T v = B^T p1 = s1 q1
  const Eigen::VectorXd v = X0.basis * p1;
  return {-2.0 * s1 * (v - s1 * U.basis * q1) * q1.transpose()};
}

TangentVector geodesic_gradient(const StiefelPoint& Ui, const StiefelPoint& Uj) {
  if (Ui.m() != Uj.m() || Ui.r() != Uj.r())
    throw ShapeError("geodesic_gradient: shape mismatch");
  // With Ui^T Uj = P S Q^T, the SVD of Uj Uj^T Ui is (Uj Q) S P^T, so the
  // paper's per-angle terms assemble into
  //   Ui P diag(c s) P^T - Uj Q diag(c) P^T,  c_l = 2 arccos(s_l)/sqrt(1-s_l^2).
  Eigen::MatrixXd P, Q;
  Eigen::VectorXd s;
  pair_svd(Ui.basis.transpose() * Uj.basis, P, Q, s);
  const Eigen::VectorXd c = arccos_coeffs(s);
  Eigen::MatrixXd grad =
      Ui.basis * (P * (c.cwiseProduct(s)).asDiagonal() * P.transpose()) -
      Uj.basis * (Q * c.asDiagonal() * P.transpose());
  return {std::move(grad)};
}

GradientStack total_gradient(const ProxyEnsemble& ens, int threads) {
  const Eigen::Index n = ens.size();
  if (n == 0 || static_cast<Eigen::Index>(ens.bases.size()) != n)
    throw ParameterError("total_gradient: ensemble proxies/bases misaligned");
  const Eigen::Index r = ens.proxies[0].r();
  const Eigen::Index m = ens.proxies[0].m();
  GradientStack stack;
  stack.tangents.resize(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](std::int64_t i) {
    const auto ui = static_cast<std::size_t>(i);
    stack.tangents[ui].delta = chordal_gradient(ens.bases[ui], ens.proxies[ui]).delta;
  });

  // Geodesic part. One SVD serves both directions of a pair, since
  // (Uj^T Ui) = Q S P^T when (Ui^T Uj) = P S Q^T; per pair only the four r x r
  // factors are kept:
  //   side i:  Ui * (P c s P^T) - Uj * (Q c P^T)
  //   side j:  Uj * (Q c s Q^T) - Ui * (P c Q^T)
  // Both stages write disjoint slots and each tangent is assembled by one
  // self-contained job, so every thread count produces bitwise-identical
  // gradients.
  const Eigen::Index npairs = n * (n - 1) / 2;
  if (ens.lambda != 0.0 && npairs > 0) {
    Eigen::MatrixXd W(m, n * r);  // all proxies side by side
    for (Eigen::Index j = 0; j < n; ++j)
      W.middleCols(j * r, r) = ens.proxies[static_cast<std::size_t>(j)].basis;
    Eigen::MatrixXd G(n * r, n * r);
    G.noalias() = W.transpose() * W;

    // lexicographic pair index of (i, j), i < j
    const auto pair_at = [n](Eigen::Index i, Eigen::Index j) {
      return i * n - i * (i + 1) / 2 + (j - i - 1);
    };
    Eigen::MatrixXd Ai(r, npairs * r), Bi(r, npairs * r), Aj(r, npairs * r), Bj(r, npairs * r);
    parallel_for(npairs, threads, [&](std::int64_t t) {
      Eigen::Index i = 0, rem = static_cast<Eigen::Index>(t);
      while (rem >= n - 1 - i) {
        rem -= n - 1 - i;
        ++i;
      }
      const Eigen::Index j = i + 1 + rem;
      Eigen::MatrixXd P, Q;
      Eigen::VectorXd s;
      pair_svd(G.block(i * r, j * r, r, r), P, Q, s);
      const Eigen::VectorXd c = ens.lambda * arccos_coeffs(s);
      const Eigen::VectorXd cs = c.cwiseProduct(s);
      const Eigen::Index at = static_cast<Eigen::Index>(t) * r;
      Ai.middleCols(at, r).noalias() = P * cs.asDiagonal() * P.transpose();
      Bi.middleCols(at, r).noalias() = Q * c.asDiagonal() * P.transpose();
      Aj.middleCols(at, r).noalias() = Q * cs.asDiagonal() * Q.transpose();
      Bj.middleCols(at, r).noalias() = P * c.asDiagonal() * Q.transpose();
    });

    parallel_for(n, threads, [&](std::int64_t k_) {
      const Eigen::Index k = static_cast<Eigen::Index>(k_);
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(r, r);
      Eigen::MatrixXd Bstack = Eigen::MatrixXd::Zero(n * r, r);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == k) continue;
        const Eigen::Index t = j < k ? pair_at(j, k) : pair_at(k, j);
        const Eigen::Index at = t * r;
        if (j < k) {  // k is the second element of the pair
          S += Aj.middleCols(at, r);
          Bstack.middleRows(j * r, r) = Bj.middleCols(at, r);
        } else {
          S += Ai.middleCols(at, r);
          Bstack.middleRows(j * r, r) = Bi.middleCols(at, r);
        }
      }
      auto& delta = stack.tangents[static_cast<std::size_t>(k)].delta;
      delta.noalias() += ens.proxies[static_cast<std::size_t>(k)].basis * S;
      delta.noalias() -= W * Bstack;
    });
  }
  double sq = 0;
  for (const auto& t : stack.tangents) sq += t.delta.squaredNorm();
  stack.norm = std::sqrt(sq);
  return stack;
}

namespace {

ProxyEnsemble step_all(const ProxyEnsemble& ens, const GradientStack& grad, double eta,
                       int threads) {
  ProxyEnsemble out;
  out.lambda = ens.lambda;
  out.bases = ens.bases;
  out.proxies.resize(ens.proxies.size());
  parallel_for(ens.size(), threads, [&](std::int64_t i) {
    const auto ui = static_cast<std::size_t>(i);
    out.proxies[ui] =
        geodesic_step(ens.proxies[ui], {-grad.tangents[ui].delta}, eta);
  });
  return out;
}

}  // namespace

ArmijoResult armijo_step(const ProxyEnsemble& ens, const GradientStack& grad, double eta0,
                         double beta, double gamma, int max_backtracks, int threads,
                         const ObjectiveValue* f0) {
  if (eta0 <= 0) throw ParameterError("armijo_step: eta0 must be positive");
  if (beta <= 0 || beta >= 1) throw ParameterError("armijo_step: beta must lie in (0,1)");
  if (gamma <= 0 || gamma >= 1) throw ParameterError("armijo_step: gamma must lie in (0,1)");
  if (max_backtracks < 0)
    throw ParameterError("armijo_step: max_backtracks must be non-negative");
  const ObjectiveValue base = f0 ? *f0 : objective_value(ens, threads);
  const double g2 = grad.norm * grad.norm;
  double eta = eta0;
  for (int nu = 0; nu <= max_backtracks; ++nu) {
    ProxyEnsemble candidate = step_all(ens, grad, eta, threads);
    ObjectiveValue f = objective_value(candidate, threads);
    if (base.total - f.total >= gamma * eta * g2)
      return {std::move(candidate), f, eta, nu, false};
    eta *= beta;
  }
  ArmijoResult out{ens, base, 0.0, max_backtracks, true};
  return out;
}

std::pair<ProxyEnsemble, OptimizationTrace> optimize(ProxyEnsemble ens,
                                                     const OptimizeSettings& settings) {
  if (settings.grad_tol <= 0 || settings.max_iters < 0)
    throw ParameterError("optimize: tolerances must be positive");
  OptimizationTrace trace;
  ObjectiveValue f = objective_value(ens, settings.threads);
  int stall_count = 0;
  trace.reason = StopReason::max_iters;
  for (int it = 0; it < settings.max_iters; ++it) {
    GradientStack grad = total_gradient(ens, settings.threads);
    if (grad.norm <= settings.grad_tol) {
      trace.reason = StopReason::grad_tol;
      break;
    }
    ArmijoResult step = armijo_step(ens, grad, settings.eta0, settings.beta, settings.gamma,
                                    settings.max_backtracks, settings.threads, &f);
    if (step.stalled) {
      trace.reason = StopReason::line_search_stall;
      break;
    }
    const double prev = f.total;
    ens = std::move(step.ens);
    f = step.value;
    trace.rows.push_back({it, f.total, f.chordal_sum, f.geodesic_sum, grad.norm, step.eta});
    if (prev - f.total < 1e-10 * std::max(std::abs(prev), 1e-12)) {
      if (++stall_count >= 20) {
        trace.reason = StopReason::relative_decrease;
        break;
      }
    } else {
      stall_count = 0;
    }
  }
  return {std::move(ens), std::move(trace)};
}

}  // namespace gf
