#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "grassfusion/errors.hpp"
#include "grassfusion/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitAllRunsFailed = 3;

struct Overrides {
  std::int64_t seed = -1;
  std::string out;
  int threads = 0;
  bool quiet = false;
};

void apply(gf::ExperimentConfig& cfg, const Overrides& ov) {
  if (ov.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(ov.seed)};
  if (!ov.out.empty()) cfg.out_dir = ov.out;
  if (ov.threads > 0) cfg.threads = ov.threads;
  if (ov.quiet) cfg.quiet = true;
  gf::validate_config(cfg);
}

void print_report(const gf::RunReport& report) {
  if (report.config.quiet) return;
  for (const auto& rec : report.records) {
    if (rec.ok)
      std::printf("p=%g seed=%llu clustering_error=%g khat=%d iterations=%d reason=%s wall=%.2fs\n",
                  rec.p, static_cast<unsigned long long>(rec.seed), rec.clustering_error, rec.khat,
                  rec.iterations, rec.termination.c_str(), rec.wall_seconds);
    else
      std::printf("p=%g seed=%llu FAILED: %s\n", rec.p,
                  static_cast<unsigned long long>(rec.seed), rec.error.c_str());
  }
  for (const auto& pt : report.curve)
    std::printf("p=%g mean_error=%g std_error=%g p_star=%g\n", pt.p, pt.mean_error, pt.std_error,
                pt.p_star);
}

int run_with_config(const std::string& config_path, const Overrides& ov,
                    const std::string& required_mode, bool single_run) {
  gf::ExperimentConfig cfg;
  try {
    cfg = gf::load_config(config_path);
    apply(cfg, ov);
    if (!required_mode.empty() && cfg.mode != required_mode)
      throw gf::ConfigError("config key 'mode': this subcommand requires mode = " + required_mode);
    if (single_run) {
      cfg.p_list.resize(1);
      cfg.seeds.resize(1);
    }
  } catch (const gf::Error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  gf::RunReport report;
  try {
    report = gf::run_experiment(cfg);
    gf::emit_outputs(report, cfg.out_dir);
  } catch (const gf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }

  print_report(report);
  if (!cfg.quiet) std::printf("outputs written to %s\n", cfg.out_dir.c_str());

  bool any_ok = false;
  for (const auto& rec : report.records) any_ok = any_ok || rec.ok;
  return any_ok || report.records.empty() ? kExitOk : kExitAllRunsFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GrassFusion: high-rank matrix completion via Grassmannian proxy fusion"};
  app.require_subcommand(1);

  Overrides ov;
  app.add_option("--seed", ov.seed, "override the config seed list with a single seed");
  app.add_option("--out", ov.out, "override the output directory");
  app.add_option("--threads", ov.threads, "override the worker thread count");
  app.add_flag("--quiet", ov.quiet, "suppress per-run output");

  std::string sweep_config, file_config, trace_config;
  auto* sweep = app.add_subcommand("synth-sweep", "sampling-rate sweep on synthetic data");
  sweep->add_option("config", sweep_config, "config file")->required();
  sweep->fallthrough();

  auto* runf = app.add_subcommand("run-file", "cluster and complete a CSV matrix");
  runf->add_option("config", file_config, "config file")->required();
  runf->fallthrough();

  auto* trace = app.add_subcommand("trace", "single run with full optimization trace");
  trace->add_option("config", trace_config, "config file")->required();
  trace->fallthrough();

  long long lm = 0, ln = 0, lr = 0;
  auto* limits = app.add_subcommand("limits", "print the sampling-rate lower bound p*");
  limits->add_option("m", lm, "ambient dimension")->required();
  limits->add_option("n", ln, "number of columns")->required();
  limits->add_option("r", lr, "subspace rank")->required();
  limits->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  if (limits->parsed()) {
    if (lm < 1 || ln < 1 || lr < 1 || lr > std::min(lm, ln)) {
      std::fprintf(stderr, "config error: limits requires 1 <= r <= min(m, n)\n");
      return kExitConfig;
    }
    std::printf("%s\n", gf::format_double(gf::sampling_limit(lr, lm, ln)).c_str());
    return kExitOk;
  }
  if (sweep->parsed()) return run_with_config(sweep_config, ov, "synthetic", false);
  if (runf->parsed()) return run_with_config(file_config, ov, "file", false);
  return run_with_config(trace_config, ov, "", true);
}
