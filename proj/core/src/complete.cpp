#include "grassfusion/complete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "grassfusion/parallel.hpp"

namespace gf {

ObservedVector observed_column(const MaskedMatrix& X, Eigen::Index j) {
  if (j < 0 || j >= X.cols()) throw ParameterError("observed_column: column out of range");
  ObservedVector out;
  out.m = X.rows();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (X.mask(i, j)) out.omega.push_back(i);
  out.values.resize(static_cast<Eigen::Index>(out.omega.size()));
  for (std::size_t t = 0; t < out.omega.size(); ++t)
    out.values(static_cast<Eigen::Index>(t)) = X.values(out.omega[t], j);
  return out;
}

namespace {

double observed_residual(const MaskedMatrix& X, const Eigen::MatrixXd& A,
                         const Eigen::MatrixXd& B) {
  double num = 0, den = 0;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      if (X.mask(i, j)) {
        const double e = A.row(i).dot(B.col(j)) - X.values(i, j);
        num += e * e;
        den += X.values(i, j) * X.values(i, j);
      }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

// orthonormal basis of the column space of A, padded deterministically with
// canonical directions when A is rank-deficient
StiefelPoint column_space(const Eigen::MatrixXd& A, Eigen::Index r) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU);
  const Eigen::Index have = std::min(svd.matrixU().cols(), r);
  Eigen::MatrixXd basis(A.rows(), r);
  Eigen::Index got = 0;
  const double cutoff = svd.singularValues().size() > 0
                            ? 1e-12 * std::max(svd.singularValues()(0), 1.0)
                            : 0.0;
  for (Eigen::Index c = 0; c < have && got < r; ++c) {
    if (svd.singularValues()(c) > cutoff) basis.col(got++) = svd.matrixU().col(c);
  }
  for (Eigen::Index e = 0; e < A.rows() && got < r; ++e) {
    Eigen::VectorXd cand = Eigen::VectorXd::Unit(A.rows(), e);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index c = 0; c < got; ++c) cand -= basis.col(c).dot(cand) * basis.col(c);
    const double nrm = cand.norm();
    if (nrm > 1e-8) basis.col(got++) = cand / nrm;
  }
  if (got < r) throw DegenerateInputError("column_space: cannot complete an orthonormal basis");
  return {std::move(basis)};
}

}  // namespace

std::pair<Eigen::MatrixXd, StiefelPoint> lrmc_als(const MaskedMatrix& cluster, Eigen::Index r,
                                                  double tol, int max_iters, std::uint64_t seed) {
  const Eigen::Index m = cluster.rows(), nc = cluster.cols();
  if (r < 1) throw ParameterError("lrmc_als: rank must be >= 1");
  std::vector<std::vector<Eigen::Index>> col_obs(static_cast<std::size_t>(nc));
  std::vector<std::vector<Eigen::Index>> row_obs(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < nc; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      if (cluster.mask(i, j)) {
        col_obs[static_cast<std::size_t>(j)].push_back(i);
        row_obs[static_cast<std::size_t>(i)].push_back(j);
      }
  for (Eigen::Index j = 0; j < nc; ++j)
    if (static_cast<Eigen::Index>(col_obs[static_cast<std::size_t>(j)].size()) <= r)
      throw UnderdeterminedError("lrmc_als: column " + std::to_string(j) + " has " +
                                 std::to_string(col_obs[static_cast<std::size_t>(j)].size()) +
                                 " observations, need more than " + std::to_string(r));

  // spectral init: top-r left singular directions of the zero-filled matrix.
  // A random init can land in a stationary ray where the observed residual
  // stalls while the factors blow up; the zero-filled spectrum starts inside
  // the right basin for generic masks.
  Eigen::MatrixXd zero_filled = Eigen::MatrixXd::Zero(m, nc);
  for (Eigen::Index j = 0; j < nc; ++j)
    for (Eigen::Index i : col_obs[static_cast<std::size_t>(j)])
      zero_filled(i, j) = cluster.values(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> init_svd(zero_filled, Eigen::ComputeThinU);
  RngStream rng(seed, "als/A");
  Eigen::MatrixXd A(m, r), B = Eigen::MatrixXd::Zero(r, nc);
  const double init_cutoff =
      init_svd.singularValues().size() > 0
          ? 1e-12 * std::max(init_svd.singularValues()(0), 1.0)
          : 0.0;
  Eigen::Index filled = 0;
  for (Eigen::Index c = 0; c < init_svd.matrixU().cols() && filled < r; ++c)
    if (init_svd.singularValues()(c) > init_cutoff) A.col(filled++) = init_svd.matrixU().col(c);
  for (Eigen::Index c = filled; c < r; ++c)
    for (Eigen::Index i = 0; i < m; ++i) A(i, c) = rng.normal();
  for (Eigen::Index i = 0; i < m; ++i)
    if (row_obs[static_cast<std::size_t>(i)].empty()) A.row(i).setZero();

  double prev = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < max_iters; ++sweep) {
    for (Eigen::Index j = 0; j < nc; ++j) {
      const auto& rows = col_obs[static_cast<std::size_t>(j)];
      Eigen::MatrixXd S(static_cast<Eigen::Index>(rows.size()), r);
      Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t t = 0; t < rows.size(); ++t) {
        S.row(static_cast<Eigen::Index>(t)) = A.row(rows[t]);
        b(static_cast<Eigen::Index>(t)) = cluster.values(rows[t], j);
      }
      B.col(j) = S.colPivHouseholderQr().solve(b);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& cols = row_obs[static_cast<std::size_t>(i)];
      if (cols.empty()) continue;
      Eigen::MatrixXd S(static_cast<Eigen::Index>(cols.size()), r);
      Eigen::VectorXd b(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t t = 0; t < cols.size(); ++t) {
        S.row(static_cast<Eigen::Index>(t)) = B.col(cols[t]).transpose();
        b(static_cast<Eigen::Index>(t)) = cluster.values(i, cols[t]);
      }
      A.row(i) = S.colPivHouseholderQr().solve(b).transpose();
    }
    const double res = observed_residual(cluster, A, B);
    if (prev - res < tol * std::max(prev, 1e-300) && sweep > 0) break;
    prev = res;
  }
  return {A * B, column_space(A, r)};
}

SubspaceEstimate identify_subspace(const Eigen::MatrixXd& completed, Eigen::Index r) {
  if (completed.cols() < 1) throw ParameterError("identify_subspace: empty cluster");
  if (r < 1 || r > completed.rows())
    throw ParameterError("identify_subspace: rank out of range");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(completed, Eigen::ComputeThinU);
  SubspaceEstimate out;
  const Eigen::VectorXd& s = svd.singularValues();
  out.rank_deficient =
      s.size() < r || (s.size() > 0 && s(std::min<Eigen::Index>(r, s.size()) - 1) <=
                                           1e-10 * std::max(s(0), 1.0));
  out.basis = column_space(completed, r);
  return out;
}

Coefficients project_coefficients(const ObservedVector& x, const SubspaceEstimate& sub) {
  const Eigen::Index r = sub.basis.r();
  const Eigen::Index no = static_cast<Eigen::Index>(x.omega.size());
  if (x.m != sub.basis.m())
    throw ShapeError("project_coefficients: ambient dimension mismatch");
  if (no <= r)
    throw UnderdeterminedError("project_coefficients: |Omega| = " + std::to_string(no) +
                               " must exceed r = " + std::to_string(r));
  Eigen::MatrixXd Uo(no, r);
  for (Eigen::Index t = 0; t < no; ++t)
    Uo.row(t) = sub.basis.basis.row(x.omega[static_cast<std::size_t>(t)]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Uo);
  if (qr.rank() < r)
    throw DegenerateInputError("project_coefficients: restricted basis is rank-deficient");
  return {qr.solve(x.values)};
}

Assignment assign_point(const ObservedVector& x, const std::vector<SubspaceEstimate>& subs,
                        double residual_threshold) {
  if (subs.empty()) throw ParameterError("assign_point: empty subspace list");
  const double xnorm = x.values.norm();
  Assignment best;
  best.residual = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < subs.size(); ++k) {
    double res;
    if (xnorm == 0.0) {
      res = 0.0;  // the zero vector lies in every subspace
    } else {
      try {
        const Coefficients th = project_coefficients(x, subs[k]);
        Eigen::VectorXd fit(static_cast<Eigen::Index>(x.omega.size()));
        for (std::size_t t = 0; t < x.omega.size(); ++t)
          fit(static_cast<Eigen::Index>(t)) =
              subs[k].basis.basis.row(x.omega[t]).dot(th.theta);
        res = (x.values - fit).norm() / xnorm;
      } catch (const DegenerateInputError&) {
        res = std::numeric_limits<double>::infinity();  // unusable restriction
      }
    }
    if (res < best.residual) {
      best.residual = res;
      best.label = static_cast<int>(k);
    }
  }
  best.assigned = best.residual <= residual_threshold;
  return best;
}

Eigen::VectorXd complete_point(const Coefficients& theta, const SubspaceEstimate& sub) {
  if (theta.theta.size() != sub.basis.r())
    throw ShapeError("complete_point: coefficient length mismatch");
  return sub.basis.basis * theta.theta;
}

Sketch sketch_select(const MaskedMatrix& X, Eigen::Index n_prime, Eigen::Index m_prime,
                     std::uint64_t seed) {
  const Eigen::Index m = X.rows(), n = X.cols();
  if (n_prime < 1 || n_prime > n || m_prime < 1 || m_prime > m)
    throw ParameterError("sketch_select: need 1 <= n' <= n and 1 <= m' <= m");
  std::vector<Eigen::Index> row_count(static_cast<std::size_t>(m), 0);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (X.mask(i, j)) ++row_count[static_cast<std::size_t>(i)];
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return row_count[static_cast<std::size_t>(a)] > row_count[static_cast<std::size_t>(b)];
  });
  Sketch out;
  out.rows.assign(order.begin(), order.begin() + m_prime);
  std::sort(out.rows.begin(), out.rows.end());

  std::vector<Eigen::Index> cols(static_cast<std::size_t>(n));
  std::iota(cols.begin(), cols.end(), 0);
  RngStream rng(seed, "sketch/cols");
  for (Eigen::Index t = 0; t < n_prime; ++t) {
    const auto pick = t + static_cast<Eigen::Index>(
                              rng.below(static_cast<std::uint64_t>(n - t)));
    std::swap(cols[static_cast<std::size_t>(t)], cols[static_cast<std::size_t>(pick)]);
  }
  out.cols.assign(cols.begin(), cols.begin() + n_prime);
  std::sort(out.cols.begin(), out.cols.end());

  out.sub.values.resize(m_prime, n_prime);
  out.sub.mask.resize(m_prime, n_prime);
  for (Eigen::Index a = 0; a < m_prime; ++a)
    for (Eigen::Index b = 0; b < n_prime; ++b) {
      out.sub.values(a, b) = X.values(out.rows[static_cast<std::size_t>(a)],
                                      out.cols[static_cast<std::size_t>(b)]);
      out.sub.mask(a, b) = X.mask(out.rows[static_cast<std::size_t>(a)],
                                  out.cols[static_cast<std::size_t>(b)]);
    }
  return out;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

}  // namespace

PipelineResult hrmc_pipeline(const MaskedMatrix& X, Eigen::Index r, double lambda,
                             const PipelineConfig& cfg) {
  if (X.cols() < 1 || X.rows() < 1) throw ParameterError("hrmc_pipeline: empty matrix");
  if (r < 1) throw ParameterError("hrmc_pipeline: rank must be >= 1");

  PipelineResult out;
  MaskedMatrix work;
  const bool sketched = cfg.n_prime > 0 || cfg.m_prime > 0;
  if (sketched) {
    const Eigen::Index np = cfg.n_prime > 0 ? cfg.n_prime : X.cols();
    const Eigen::Index mp = cfg.m_prime > 0 ? cfg.m_prime : X.rows();
    Sketch sk = stage("sketch_select", [&] { return sketch_select(X, np, mp, cfg.seed); });
    work = std::move(sk.sub);
    out.rows = std::move(sk.rows);
    out.solved_cols = std::move(sk.cols);
  } else {
    work = X;
    out.rows.resize(static_cast<std::size_t>(X.rows()));
    std::iota(out.rows.begin(), out.rows.end(), 0);
    out.solved_cols.resize(static_cast<std::size_t>(X.cols()));
    std::iota(out.solved_cols.begin(), out.solved_cols.end(), 0);
  }

  // proxies for the solved columns
  ProxyEnsemble ens;
  ens.lambda = lambda;
  for (Eigen::Index j = 0; j < work.cols(); ++j) {
    ObservedVector x = observed_column(work, j);
    ens.bases.push_back(build_completion_basis(x));
    RngStream rng(cfg.seed,
                  "init/" + std::to_string(out.solved_cols[static_cast<std::size_t>(j)]));
    ens.proxies.push_back(stage("init_proxy", [&] { return init_proxy(x, r, rng); }));
  }
  auto [solved, trace] = stage("optimize", [&] { return optimize(std::move(ens), cfg.opt); });
  out.trace = std::move(trace);

  DistanceMatrix D = distance_matrix(solved, cfg.opt.threads);
  Eigen::MatrixXd A = affinity(D, cfg.bandwidth);
  Labeling local = stage("spectral_cluster",
                         [&] { return spectral_cluster(A, cfg.k, cfg.seed, cfg.k_max); });

  // per-cluster completion on the solved columns
  const Eigen::Index mkeep = work.rows();
  out.completed = Eigen::MatrixXd::Zero(mkeep, X.cols());
  out.subspaces.resize(static_cast<std::size_t>(local.k));
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(local.k));
  for (std::size_t t = 0; t < local.labels.size(); ++t)
    members[static_cast<std::size_t>(local.labels[t])].push_back(static_cast<Eigen::Index>(t));
  for (int c = 0; c < local.k; ++c) {
    const auto& cols = members[static_cast<std::size_t>(c)];
    MaskedMatrix sub;
    sub.values.resize(mkeep, static_cast<Eigen::Index>(cols.size()));
    sub.mask.resize(mkeep, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t t = 0; t < cols.size(); ++t) {
      sub.values.col(static_cast<Eigen::Index>(t)) = work.values.col(cols[t]);
      sub.mask.col(static_cast<Eigen::Index>(t)) = work.mask.col(cols[t]);
    }
    const std::string name = "lrmc_als[cluster " + std::to_string(c) + "]";
    auto [filled, space] = stage(name.c_str(), [&] {
      return lrmc_als(sub, r, cfg.als_tol, cfg.als_max_iters, mix64(cfg.seed) + c);
    });
    (void)space;
    SubspaceEstimate est = stage("identify_subspace", [&] {
      return identify_subspace(filled, r);
    });
    est.cluster_id = c;
    out.subspaces[static_cast<std::size_t>(c)] = est;
    for (std::size_t t = 0; t < cols.size(); ++t)
      out.completed.col(out.solved_cols[static_cast<std::size_t>(cols[t])]) =
          filled.col(static_cast<Eigen::Index>(t));
  }

  // held-out columns: assign by relative residual, then complete
  out.labels.labels.assign(static_cast<std::size_t>(X.cols()), 0);
  out.labels.k = local.k;
  std::vector<bool> is_solved(static_cast<std::size_t>(X.cols()), false);
  for (std::size_t t = 0; t < out.solved_cols.size(); ++t) {
    is_solved[static_cast<std::size_t>(out.solved_cols[t])] = true;
    out.labels.labels[static_cast<std::size_t>(out.solved_cols[t])] = local.labels[t];
  }
  MaskedMatrix kept;
  if (sketched) {
    kept.values.resize(mkeep, X.cols());
    kept.mask.resize(mkeep, X.cols());
    for (Eigen::Index a = 0; a < mkeep; ++a) {
      kept.values.row(a) = X.values.row(out.rows[static_cast<std::size_t>(a)]);
      kept.mask.row(a) = X.mask.row(out.rows[static_cast<std::size_t>(a)]);
    }
  } else {
    kept = X;
  }
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (is_solved[static_cast<std::size_t>(j)]) continue;
    ObservedVector x = observed_column(kept, j);
    Assignment asg = stage("assign_point", [&] {
      return assign_point(x, out.subspaces, cfg.residual_threshold);
    });
    out.labels.labels[static_cast<std::size_t>(j)] = asg.label;
    if (!asg.assigned) out.unassigned.push_back(j);
    const auto& sub = out.subspaces[static_cast<std::size_t>(asg.label)];
    Coefficients th = stage("project_coefficients", [&] {
      return project_coefficients(x, sub);
    });
    out.completed.col(j) = complete_point(th, sub);
  }

  // optional second round on the unassigned set
  if (cfg.refine_unassigned && !out.unassigned.empty()) {
    MaskedMatrix rest;
    rest.values.resize(mkeep, static_cast<Eigen::Index>(out.unassigned.size()));
    rest.mask.resize(mkeep, static_cast<Eigen::Index>(out.unassigned.size()));
    for (std::size_t t = 0; t < out.unassigned.size(); ++t) {
      rest.values.col(static_cast<Eigen::Index>(t)) = kept.values.col(out.unassigned[t]);
      rest.mask.col(static_cast<Eigen::Index>(t)) = kept.mask.col(out.unassigned[t]);
    }
    PipelineConfig inner = cfg;
    inner.n_prime = 0;
    inner.m_prime = 0;
    inner.refine_unassigned = false;
    inner.seed = mix64(cfg.seed ^ 0x5eed);
    PipelineResult second = hrmc_pipeline(rest, r, lambda, inner);
    for (std::size_t t = 0; t < out.unassigned.size(); ++t) {
      out.labels.labels[static_cast<std::size_t>(out.unassigned[t])] =
          out.labels.k + second.labels.labels[t];
      out.completed.col(out.unassigned[t]) = second.completed.col(static_cast<Eigen::Index>(t));
    }
    for (auto& est : second.subspaces) {
      est.cluster_id += out.labels.k;
      out.subspaces.push_back(est);
    }
    out.labels.k += second.labels.k;
    out.unassigned.clear();
  }
  return out;
}

std::vector<RankSweepEntry> rank_sweep(const MaskedMatrix& X, Eigen::Index r_max, double lambda,
                                       const PipelineConfig& cfg, double fit_threshold) {
  if (r_max < 1) throw ParameterError("rank_sweep: r_max must be >= 1");
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(X.cols()));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<RankSweepEntry> out;
  for (Eigen::Index r = 1; r <= r_max && !remaining.empty(); ++r) {
    // only columns with more than r observations can run at this rank
    std::vector<Eigen::Index> eligible;
    for (Eigen::Index j : remaining) {
      Eigen::Index cnt = 0;
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (X.mask(i, j)) ++cnt;
      if (cnt > r) eligible.push_back(j);
    }
    if (eligible.empty()) continue;
    MaskedMatrix sub;
    sub.values.resize(X.rows(), static_cast<Eigen::Index>(eligible.size()));
    sub.mask.resize(X.rows(), static_cast<Eigen::Index>(eligible.size()));
    for (std::size_t t = 0; t < eligible.size(); ++t) {
      sub.values.col(static_cast<Eigen::Index>(t)) = X.values.col(eligible[t]);
      sub.mask.col(static_cast<Eigen::Index>(t)) = X.mask.col(eligible[t]);
    }
    PipelineResult res;
    try {
      res = hrmc_pipeline(sub, r, lambda, cfg);
    } catch (const Error&) {
      break;  // degenerate stage at this rank; report what is explained so far
    }
    RankSweepEntry entry;
    entry.r = r;
    std::vector<Eigen::Index> still;
    for (std::size_t t = 0; t < eligible.size(); ++t) {
      double num = 0, den = 0;
      for (Eigen::Index a = 0; a < sub.rows(); ++a)
        if (sub.mask(a, static_cast<Eigen::Index>(t))) {
          const double e = res.completed(a, static_cast<Eigen::Index>(t)) -
                           sub.values(a, static_cast<Eigen::Index>(t));
          num += e * e;
          den += sub.values(a, static_cast<Eigen::Index>(t)) *
                 sub.values(a, static_cast<Eigen::Index>(t));
        }
      const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
      if (rel <= fit_threshold) {
        entry.explained.push_back(eligible[t]);
      } else {
        still.push_back(eligible[t]);
      }
    }
    std::vector<Eigen::Index> next;
    for (Eigen::Index j : remaining) {
      const bool used =
          std::find(eligible.begin(), eligible.end(), j) != eligible.end();
      const bool explained = std::find(entry.explained.begin(), entry.explained.end(), j) !=
                             entry.explained.end();
      if (!used || !explained) next.push_back(j);
    }
    if (!entry.explained.empty()) out.push_back(std::move(entry));
    remaining = std::move(next);
  }
  return out;
}

}  // namespace gf
