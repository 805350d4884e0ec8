#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grassfusion/objective.hpp"

namespace gf {

struct ExperimentConfig {
  std::string mode = "synthetic";  // synthetic | file

  // synthetic instance
  Eigen::Index m = 50;
  Eigen::Index r = 2;
  Eigen::Index K = 2;
  Eigen::Index n_per_cluster = 30;
  double noise_sigma = 0.0;

  std::string file;  // file mode input CSV

  std::vector<double> p_list{0.5};
  std::vector<std::uint64_t> seeds{0};
  double lambda = 1e-5;

  OptimizeSettings opt;  // eta0, beta, gamma, grad_tol, max_iters, max_backtracks

  int k = 0;             // 0 = eigengap
  double bandwidth = 0;  // <= 0 = median heuristic
  int k_max = 10;

  Eigen::Index n_prime = 0;
  Eigen::Index m_prime = 0;
  double residual_threshold = 0.3;
  bool refine_unassigned = false;

  double als_tol = 1e-10;
  int als_max_iters = 500;

  std::string out_dir = ".";
  int threads = 1;
  bool quiet = false;
};

// Flat key = value text format; '#' starts a comment. Unknown keys and
// out-of-range values are rejected with the offending key named.
ExperimentConfig load_config(const std::string& path);

// Same parser over an already-read buffer (used by tests).
ExperimentConfig parse_config(const std::string& text);

void validate_config(const ExperimentConfig& cfg);

}  // namespace gf
