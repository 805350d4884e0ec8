#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "grassfusion/experiment.hpp"

using namespace gf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// A tiny instance that solves in well under a second.
ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.m = 10;
  cfg.r = 1;
  cfg.K = 2;
  cfg.n_per_cluster = 8;
  cfg.p_list = {0.8, 1.0};
  cfg.seeds = {0, 1, 2};
  cfg.lambda = 1e-4;
  cfg.k = 2;
  cfg.opt.max_iters = 400;
  return cfg;
}

}  // namespace

TEST_CASE("completion_error_missing scores only the hidden entries") {
  Eigen::MatrixXd truth(2, 2), completed(2, 2);
  truth << 1, 2, 3, 4;
  completed << 1, 2, 3, 4;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(2, 2);
  mask.setConstant(true);
  CHECK(completion_error_missing(truth, completed, mask) == 0.0);

  completed(0, 0) = 99;   // observed entry: ignored
  CHECK(completion_error_missing(truth, completed, mask) == 0.0);

  mask(0, 1) = false;     // hide truth = 2
  completed(0, 1) = 2.5;  // error 0.5 against magnitude 2
  CHECK(completion_error_missing(truth, completed, mask) == doctest::Approx(0.25).epsilon(1e-12));

  Eigen::MatrixXd wrong(3, 2);
  CHECK_THROWS_AS(static_cast<void>(completion_error_missing(wrong, completed, mask)), ShapeError);
}

TEST_CASE("max_matched_subspace_angle matches clusters before measuring") {
  // true bases: e0 and e1 lines in R^3; estimates swapped relative to labels
  std::vector<StiefelPoint> truth;
  truth.push_back(StiefelPoint{Eigen::MatrixXd::Identity(3, 1)});
  Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 1);
  e1(1, 0) = 1;
  truth.push_back(StiefelPoint{e1});

  std::vector<SubspaceEstimate> subs(2);
  subs[0].basis = truth[1];  // cluster 0 found the e1 line
  subs[0].cluster_id = 0;
  subs[1].basis = truth[0];
  subs[1].cluster_id = 1;

  Labeling y, yhat;
  y.labels = {0, 0, 1, 1};
  y.k = 2;
  yhat.labels = {1, 1, 0, 0};  // predicted labels are permuted
  yhat.k = 2;

  CHECK(max_matched_subspace_angle(subs, yhat, y, truth) < 1e-12);

  // an off-by-angle estimate shows up as the max
  Eigen::MatrixXd tilted(3, 1);
  tilted << std::cos(0.3), std::sin(0.3), 0;
  subs[1].basis = StiefelPoint{tilted};  // matched against e0
  CHECK(max_matched_subspace_angle(subs, yhat, y, truth) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("run_experiment produces one record per (p, seed) in config order") {
  const ExperimentConfig cfg = tiny_config();
  const RunReport report = run_experiment(cfg);
  REQUIRE(report.records.size() == 6);
  REQUIRE(report.traces.size() == 6);
  REQUIRE(report.curve.size() == 2);
  std::size_t idx = 0;
  for (double p : cfg.p_list)
    for (std::uint64_t seed : cfg.seeds) {
      CHECK(report.records[idx].p == p);
      CHECK(report.records[idx].seed == seed);
      ++idx;
    }
  for (const auto& rec : report.records) {
    CHECK(rec.ok);
    CHECK(rec.clustering_error >= 0.0);
    CHECK(rec.clustering_error <= 1.0);
    CHECK(rec.iterations >= 1);
    CHECK(!rec.termination.empty());
    CHECK(rec.wall_seconds >= 0.0);
  }
}

TEST_CASE("run_experiment aggregates the curve exactly") {
  const ExperimentConfig cfg = tiny_config();
  const RunReport report = run_experiment(cfg);
  for (std::size_t pi = 0; pi < report.curve.size(); ++pi) {
    const CurvePoint& pt = report.curve[pi];
    CHECK(pt.p == cfg.p_list[pi]);
    double sum = 0;
    std::size_t cnt = 0;
    for (const auto& rec : report.records)
      if (rec.p == pt.p && rec.ok) {
        sum += rec.clustering_error;
        ++cnt;
      }
    REQUIRE(cnt == cfg.seeds.size());
    CHECK(pt.mean_error == sum / static_cast<double>(cnt));
    CHECK(pt.p_star ==
          sampling_limit(cfg.r, cfg.m, cfg.K * cfg.n_per_cluster));
  }
  // fully observed tiny instance separates perfectly
  CHECK(report.curve[1].mean_error == 0.0);
  CHECK(report.curve[1].std_error == 0.0);
}

TEST_CASE("run_experiment is deterministic") {
  const ExperimentConfig cfg = tiny_config();
  const RunReport a = run_experiment(cfg);
  const RunReport b = run_experiment(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].clustering_error == b.records[i].clustering_error);
    CHECK(a.records[i].completion_error == b.records[i].completion_error);
    CHECK(a.records[i].iterations == b.records[i].iterations);
  }
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    REQUIRE(a.traces[i].rows.size() == b.traces[i].rows.size());
    for (std::size_t t = 0; t < a.traces[i].rows.size(); ++t)
      CHECK(a.traces[i].rows[t].objective == b.traces[i].rows[t].objective);
  }
}

TEST_CASE("emit_outputs writes curve, traces, and summary") {
  namespace fs = std::filesystem;
  const ExperimentConfig base = tiny_config();
  ExperimentConfig cfg = base;
  cfg.p_list = {0.9};
  cfg.seeds = {0, 1};
  const RunReport report = run_experiment(cfg);

  const fs::path dir = fs::temp_directory_path() / "grassfusion_experiment_test";
  fs::remove_all(dir);
  emit_outputs(report, dir.string());

  CHECK(fs::exists(dir / "curve.csv"));
  CHECK(fs::exists(dir / "trace_p0_seed0.csv"));
  CHECK(fs::exists(dir / "trace_p0_seed1.csv"));
  CHECK(fs::exists(dir / "summary.json"));

  const std::string curve = slurp((dir / "curve.csv").string());
  CHECK(curve.rfind("p,mean_error,std_error,p_star\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 2);

  const std::string trace = slurp((dir / "trace_p0_seed0.csv").string());
  CHECK(trace.rfind("iteration,objective,chordal_sum,geodesic_sum,grad_norm,eta\n", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') >= 2);

  const std::string summary = slurp((dir / "summary.json").string());
  CHECK(summary.find("\"runs\"") != std::string::npos);
  CHECK(summary.find("\"config\"") != std::string::npos);
  CHECK(summary.find("\"curve\"") != std::string::npos);

  // an independent run reproduces the timing-free artifacts byte for byte,
  // and re-emitting the same report reproduces the summary too
  const fs::path dir2 = fs::temp_directory_path() / "grassfusion_experiment_test2";
  fs::remove_all(dir2);
  emit_outputs(run_experiment(cfg), dir2.string());
  CHECK(slurp((dir / "curve.csv").string()) == slurp((dir2 / "curve.csv").string()));
  CHECK(slurp((dir / "trace_p0_seed1.csv").string()) ==
        slurp((dir2 / "trace_p0_seed1.csv").string()));
  const fs::path dir3 = fs::temp_directory_path() / "grassfusion_experiment_test3";
  fs::remove_all(dir3);
  emit_outputs(report, dir3.string());
  CHECK(slurp((dir / "summary.json").string()) == slurp((dir3 / "summary.json").string()));
}

TEST_CASE("an empty seed list yields header-only outputs") {
  namespace fs = std::filesystem;
  ExperimentConfig cfg = tiny_config();
  cfg.seeds.clear();
  const RunReport report = run_experiment(cfg);
  CHECK(report.records.empty());
  CHECK(report.curve.empty());

  const fs::path dir = fs::temp_directory_path() / "grassfusion_experiment_empty";
  fs::remove_all(dir);
  emit_outputs(report, dir.string());
  CHECK(slurp((dir / "curve.csv").string()) == "p,mean_error,std_error,p_star\n");
  CHECK(fs::exists(dir / "summary.json"));
  // no trace files beyond the two fixed outputs
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 2);
}

TEST_CASE("file mode runs on a CSV and skips truth metrics") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "grassfusion_experiment_file";
  fs::create_directories(dir);
  // rank-1 data, two lines in R^4, a few holes
  const std::string csv =
      "1,2,0,0,3\n"
      "2,4,0,,6\n"
      "0,0,1,2,0\n"
      ",0,3,6,0\n";
  const std::string path = (dir / "data.csv").string();
  write_text_file(path, csv);

  ExperimentConfig cfg;
  cfg.mode = "file";
  cfg.file = path;
  cfg.r = 1;
  cfg.k = 2;
  cfg.seeds = {0};
  cfg.opt.max_iters = 300;
  cfg.lambda = 1e-4;
  const RunReport report = run_experiment(cfg);
  REQUIRE(report.records.size() == 1);
  const RunRecord& rec = report.records[0];
  CHECK(rec.ok);
  CHECK(rec.p == doctest::Approx(18.0 / 20.0));  // observed fraction
  CHECK(std::isnan(rec.clustering_error));
  CHECK(std::isnan(rec.completion_error));
  CHECK(rec.khat == 2);
  REQUIRE(report.curve.size() == 1);
  CHECK(std::isnan(report.curve[0].mean_error));
}
