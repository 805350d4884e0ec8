#include "grassfusion/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "grassfusion/parallel.hpp"

namespace gf {

DistanceMatrix distance_matrix(const ProxyEnsemble& ens, int threads) {
  const Eigen::Index n = ens.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const Eigen::Index npairs = n * (n - 1) / 2;
  parallel_for(npairs, threads, [&](std::int64_t t) {
    Eigen::Index i = 0, rem = static_cast<Eigen::Index>(t);
    while (rem >= n - 1 - i) {
      rem -= n - 1 - i;
      ++i;
    }
    const Eigen::Index j = i + 1 + rem;
    const double d = geodesic_distance(ens.proxies[static_cast<std::size_t>(i)],
                                       ens.proxies[static_cast<std::size_t>(j)]);
    D(i, j) = d;
    D(j, i) = d;
  });
  return {std::move(D)};
}

Eigen::MatrixXd affinity(const DistanceMatrix& D, double bandwidth) {
  const Eigen::Index n = D.entries.rows();
  if (D.entries.cols() != n) throw ShapeError("affinity: distance matrix must be square");
  double s = bandwidth;
  if (s <= 0) {
    std::vector<double> pos;
    pos.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (D.entries(i, j) > 0) pos.push_back(D.entries(i, j));
    if (pos.empty()) {
      s = 1.0;
    } else {
      // median of positive off-diagonal distances
      const std::size_t mid = pos.size() / 2;
      std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(mid), pos.end());
      s = pos[mid];
      if (pos.size() % 2 == 0) {
        const double hi = s;
        std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                         pos.end());
        s = 0.5 * (pos[mid - 1] + hi);
      }
    }
  }
  Eigen::MatrixXd A = (-D.entries.array().square() / (2.0 * s * s)).exp();
  A.diagonal().setOnes();
  return A;
}

namespace {

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& A) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw ShapeError("spectral: affinity must be square");
  Eigen::VectorXd deg = A.rowwise().sum();
  Eigen::VectorXd dinv = deg.cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n) -
                      dinv.asDiagonal() * A * dinv.asDiagonal();
  return L;
}

int eigengap_from_values(const Eigen::VectorXd& w, int k_max) {
  const int n = static_cast<int>(w.size());
  const int lim = std::min(n, k_max);
  int best_k = 1;
  double best_gap = -1.0;
  for (int k = 1; k < lim; ++k) {
    const double gap = w(k) - w(k - 1);  // lambda_{k+1} - lambda_k, 1-indexed
    if (gap > best_gap) {
      best_gap = gap;
      best_k = k;
    }
  }
  return best_k;
}

struct KmeansRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_once(const Eigen::MatrixXd& pts, int k, RngStream& rng, int max_iters) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd centers(k, pts.cols());
  // k-means++ seeding
  std::vector<double> dist2(static_cast<std::size_t>(n),
                            std::numeric_limits<double>::infinity());
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.row(0) = pts.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (pts.row(i) - centers.row(c - 1)).squaredNorm();
      dist2[static_cast<std::size_t>(i)] = std::min(dist2[static_cast<std::size_t>(i)], d);
      total += dist2[static_cast<std::size_t>(i)];
    }
    Eigen::Index pick = n - 1;
    if (total > 0) {
      double target = rng.uniform() * total, acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[static_cast<std::size_t>(i)];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = pts.row(pick);
  }
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (int sweep = 0; sweep < max_iters; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bestd = (pts.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (pts.row(i) - centers.row(c)).squaredNorm();
        if (d < bestd) {
          bestd = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    centers.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      centers.row(labels[static_cast<std::size_t>(i)]) += pts.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // reseed an empty cluster at the point farthest from its centroid
        Eigen::Index far = 0;
        double fard = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (pts.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > fard) {
            fard = d;
            far = i;
          }
        }
        centers.row(c) = pts.row(far);
        labels[static_cast<std::size_t>(far)] = c;
        changed = true;
      }
    }
    if (!changed && sweep > 0) break;
  }
  KmeansRun run;
  run.labels = std::move(labels);
  run.inertia = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    run.inertia += (pts.row(i) - centers.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return run;
}

}  // namespace

int estimate_k_eigengap(const Eigen::MatrixXd& A, int k_max) {
  if (A.rows() < 2) throw ParameterError("estimate_k_eigengap: need at least 2 points");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normalized_laplacian(A),
                                                    Eigen::EigenvaluesOnly);
  return eigengap_from_values(es.eigenvalues(), k_max);
}

Labeling spectral_cluster(const Eigen::MatrixXd& A, int k, std::uint64_t seed, int k_max) {
  const Eigen::Index n = A.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normalized_laplacian(A));
  if (k == 0) k = eigengap_from_values(es.eigenvalues(), k_max);
  if (k < 1 || k > n)
    throw ParameterError("spectral_cluster: k = " + std::to_string(k) + " with n = " +
                         std::to_string(n) + " points");
  Eigen::MatrixXd emb = es.eigenvectors().leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double nrm = emb.row(i).norm();
    if (nrm > 1e-300) emb.row(i) /= nrm;
  }
  KmeansRun best;
  for (int restart = 0; restart < 10; ++restart) {
    RngStream rng(seed, "kmeans/" + std::to_string(restart));
    KmeansRun run = kmeans_once(emb, k, rng, 300);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return {std::move(best.labels), k};
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight) {
  const int n = static_cast<int>(weight.rows());
  if (weight.cols() != n) throw ShapeError("max_weight_assignment: matrix must be square");
  // Hungarian algorithm with potentials on the negated (cost) matrix
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = -weight(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return row_to_col;
}

double clustering_error(const Labeling& yhat, const Labeling& y) {
  const std::size_t n = yhat.labels.size();
  if (n != y.labels.size()) throw ShapeError("clustering_error: length mismatch");
  if (n == 0) return 0.0;
  int kh = 0, kt = 0;
  for (int l : yhat.labels) {
    if (l < 0) throw ParameterError("clustering_error: negative label");
    kh = std::max(kh, l + 1);
  }
  for (int l : y.labels) {
    if (l < 0) throw ParameterError("clustering_error: negative label");
    kt = std::max(kt, l + 1);
  }
  const int s = std::max(kh, kt);
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(s, s);
  for (std::size_t i = 0; i < n; ++i) confusion(yhat.labels[i], y.labels[i]) += 1.0;
  const std::vector<int> match = max_weight_assignment(confusion);
  std::size_t agreed = 0;
  for (int a = 0; a < s; ++a)
    agreed += static_cast<std::size_t>(confusion(a, match[static_cast<std::size_t>(a)]));
  // single division so the result is bit-identical to mismatches/n
  return static_cast<double>(n - agreed) / static_cast<double>(n);
}

}  // namespace gf
