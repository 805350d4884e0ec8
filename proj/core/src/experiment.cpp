#include "grassfusion/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "json.hpp"

#include "grassfusion/errors.hpp"

namespace gf {

double completion_error_missing(
    const Eigen::MatrixXd& truth, const Eigen::MatrixXd& completed,
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
  if (truth.rows() != completed.rows() || truth.cols() != completed.cols() ||
      truth.rows() != mask.rows() || truth.cols() != mask.cols())
    throw ShapeError("completion_error_missing: mismatched shapes");
  double num = 0.0, den = 0.0;
  bool any = false;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      if (!mask(i, j)) {
        any = true;
        const double d = truth(i, j) - completed(i, j);
        num += d * d;
        den += truth(i, j) * truth(i, j);
      }
  if (!any) return 0.0;
  return std::sqrt(num) / std::sqrt(std::max(den, 1e-300));
}

double max_matched_subspace_angle(const std::vector<SubspaceEstimate>& subs, const Labeling& yhat,
                                  const Labeling& y, const std::vector<StiefelPoint>& true_bases) {
  if (yhat.labels.size() != y.labels.size())
    throw ShapeError("max_matched_subspace_angle: label length mismatch");
  const int s = std::max(yhat.k, y.k);
  if (s == 0) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(s, s);
  for (std::size_t i = 0; i < y.labels.size(); ++i) {
    const int a = yhat.labels[i];
    const int b = y.labels[i];
    if (a >= 0 && a < s && b >= 0 && b < s) confusion(a, b) += 1.0;
  }
  const std::vector<int> match = max_weight_assignment(confusion);

  double worst = std::numeric_limits<double>::quiet_NaN();
  for (const auto& sub : subs) {
    const int c = sub.cluster_id;
    if (c < 0 || c >= yhat.k) continue;
    const int t = match[static_cast<std::size_t>(c)];
    if (t < 0 || t >= static_cast<int>(true_bases.size())) continue;
    const PrincipalAngles pa = principal_angles(sub.basis, true_bases[static_cast<std::size_t>(t)]);
    const double a = pa.angles.size() ? pa.angles.maxCoeff() : 0.0;
    if (std::isnan(worst) || a > worst) worst = a;
  }
  return worst;
}

namespace {

PipelineConfig pipeline_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  PipelineConfig pc;
  pc.opt = cfg.opt;
  pc.opt.threads = cfg.threads;
  pc.k = cfg.k;
  pc.bandwidth = cfg.bandwidth;
  pc.k_max = cfg.k_max;
  pc.n_prime = cfg.n_prime;
  pc.m_prime = cfg.m_prime;
  pc.residual_threshold = cfg.residual_threshold;
  pc.refine_unassigned = cfg.refine_unassigned;
  pc.als_tol = cfg.als_tol;
  pc.als_max_iters = cfg.als_max_iters;
  pc.seed = seed;
  return pc;
}

void score_against_truth(const GroundTruth& gt, const MaskedMatrix& masked,
                         const PipelineResult& res, RunRecord& rec) {
  rec.clustering_error = clustering_error(res.labels, gt.labels);

  // Completion is scored on the rows the pipeline kept (all of them when
  // unsketched).
  Eigen::MatrixXd truth(static_cast<Eigen::Index>(res.rows.size()), gt.full_matrix.cols());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(truth.rows(), truth.cols());
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    const Eigen::Index src = res.rows[static_cast<std::size_t>(i)];
    truth.row(i) = gt.full_matrix.row(src);
    for (Eigen::Index j = 0; j < truth.cols(); ++j) mask(i, j) = masked.mask(src, j);
  }
  rec.completion_error = completion_error_missing(truth, res.completed, mask);
  rec.max_angle = max_matched_subspace_angle(res.subspaces, res.labels, gt.labels, gt.bases);
}

RunRecord run_synthetic(const ExperimentConfig& cfg, double p, std::uint64_t seed,
                        OptimizationTrace& trace_out) {
  RunRecord rec;
  rec.p = p;
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const GroundTruth gt = generate_union(cfg.m, cfg.r, cfg.K, cfg.n_per_cluster, seed);
    Eigen::MatrixXd X = gt.full_matrix;
    if (cfg.noise_sigma > 0) X = add_noise(X, cfg.noise_sigma, seed);
    const MaskedMatrix masked = apply_mask(X, p, seed);
    const PipelineResult res = hrmc_pipeline(masked, cfg.r, cfg.lambda, pipeline_config(cfg, seed));
    trace_out = res.trace;
    rec.khat = res.labels.k;
    rec.iterations = static_cast<int>(res.trace.rows.size());
    rec.termination = to_string(res.trace.reason);
    score_against_truth(gt, masked, res, rec);
    rec.ok = true;
  } catch (const Error& e) {
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RunRecord run_file(const ExperimentConfig& cfg, const MaskedMatrix& X, double observed_fraction,
                   std::uint64_t seed, OptimizationTrace& trace_out) {
  RunRecord rec;
  rec.p = observed_fraction;
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const PipelineResult res = hrmc_pipeline(X, cfg.r, cfg.lambda, pipeline_config(cfg, seed));
    trace_out = res.trace;
    rec.khat = res.labels.k;
    rec.iterations = static_cast<int>(res.trace.rows.size());
    rec.termination = to_string(res.trace.reason);
    rec.ok = true;  // no ground truth: error metrics stay NaN
  } catch (const Error& e) {
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  RunReport report;
  report.config = cfg;

  std::vector<double> ps = cfg.p_list;
  MaskedMatrix file_data;
  double observed_fraction = 1.0;
  if (cfg.mode == "file") {
    file_data = load_masked_matrix(cfg.file);
    Eigen::Index obs = 0;
    for (Eigen::Index j = 0; j < file_data.cols(); ++j)
      for (Eigen::Index i = 0; i < file_data.rows(); ++i)
        if (file_data.mask(i, j)) ++obs;
    observed_fraction =
        static_cast<double>(obs) / static_cast<double>(file_data.rows() * file_data.cols());
    ps = {observed_fraction};  // the file fixes its own sampling rate
  }

  if (cfg.seeds.empty()) return report;  // nothing to run: header-only outputs

  for (double p : ps) {
    std::vector<double> errors;
    for (std::uint64_t seed : cfg.seeds) {
      OptimizationTrace trace;
      RunRecord rec = cfg.mode == "file"
                          ? run_file(cfg, file_data, observed_fraction, seed, trace)
                          : run_synthetic(cfg, p, seed, trace);
      if (rec.ok && !std::isnan(rec.clustering_error)) errors.push_back(rec.clustering_error);
      report.records.push_back(std::move(rec));
      report.traces.push_back(std::move(trace));
    }
    CurvePoint pt;
    pt.p = p;
    if (!errors.empty()) {
      double sum = 0.0;
      for (double e : errors) sum += e;
      pt.mean_error = sum / static_cast<double>(errors.size());
      double var = 0.0;
      for (double e : errors) var += (e - pt.mean_error) * (e - pt.mean_error);
      pt.std_error = std::sqrt(var / static_cast<double>(errors.size()));
    } else {
      pt.mean_error = std::numeric_limits<double>::quiet_NaN();
      pt.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    const Eigen::Index n = cfg.mode == "file" ? file_data.cols()
                                              : static_cast<Eigen::Index>(cfg.K * cfg.n_per_cluster);
    const Eigen::Index m = cfg.mode == "file" ? file_data.rows() : cfg.m;
    pt.p_star = sampling_limit(cfg.r, m, n);
    report.curve.push_back(pt);
  }
  return report;
}

void emit_outputs(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FileError("cannot create output directory: " + dir);

  write_curve_csv((fs::path(dir) / "curve.csv").string(), report.curve);

  const auto& cfg = report.config;
  for (std::size_t idx = 0; idx < report.records.size(); ++idx) {
    const auto& rec = report.records[idx];
    const std::size_t pi = cfg.seeds.empty() ? 0 : idx / cfg.seeds.size();
    const std::string name =
        "trace_p" + std::to_string(pi) + "_seed" + std::to_string(rec.seed) + ".csv";
    write_trace_csv((fs::path(dir) / name).string(), report.traces[idx]);
  }

  nlohmann::json j;
  j["config"] = {{"mode", cfg.mode},
                 {"m", cfg.m},
                 {"r", cfg.r},
                 {"K", cfg.K},
                 {"n_per_cluster", cfg.n_per_cluster},
                 {"noise_sigma", cfg.noise_sigma},
                 {"file", cfg.file},
                 {"p_list", cfg.p_list},
                 {"seeds", cfg.seeds},
                 {"lambda", cfg.lambda},
                 {"eta0", cfg.opt.eta0},
                 {"beta", cfg.opt.beta},
                 {"gamma", cfg.opt.gamma},
                 {"grad_tol", cfg.opt.grad_tol},
                 {"max_iters", cfg.opt.max_iters},
                 {"max_backtracks", cfg.opt.max_backtracks},
                 {"k", cfg.k},
                 {"bandwidth", cfg.bandwidth},
                 {"k_max", cfg.k_max},
                 {"n_prime", cfg.n_prime},
                 {"m_prime", cfg.m_prime},
                 {"residual_threshold", cfg.residual_threshold},
                 {"refine_unassigned", cfg.refine_unassigned},
                 {"als_tol", cfg.als_tol},
                 {"als_max_iters", cfg.als_max_iters},
                 {"out_dir", cfg.out_dir},
                 {"threads", cfg.threads}};
  j["runs"] = nlohmann::json::array();
  for (const auto& rec : report.records) {
    nlohmann::json r;
    r["p"] = rec.p;
    r["seed"] = rec.seed;
    r["ok"] = rec.ok;
    r["error"] = rec.error;
    r["clustering_error"] = rec.clustering_error;
    r["completion_error"] = rec.completion_error;
    r["max_angle"] = rec.max_angle;
    r["khat"] = rec.khat;
    r["iterations"] = rec.iterations;
    r["termination"] = rec.termination;
    r["wall_seconds"] = rec.wall_seconds;
    j["runs"].push_back(std::move(r));
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& pt : report.curve)
    curve.push_back({{"p", pt.p},
                     {"mean_error", pt.mean_error},
                     {"std_error", pt.std_error},
                     {"p_star", pt.p_star}});
  j["curve"] = std::move(curve);

  write_text_file((fs::path(dir) / "summary.json").string(), j.dump(2) + "\n");
}

}  // namespace gf
