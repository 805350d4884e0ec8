#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "grassfusion/complete.hpp"
#include "grassfusion/config.hpp"
#include "grassfusion/io.hpp"
#include "grassfusion/synth.hpp"

namespace gf {

struct RunRecord {
  double p = 1.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // stage-tagged message when !ok
  double clustering_error = std::numeric_limits<double>::quiet_NaN();
  double completion_error = std::numeric_limits<double>::quiet_NaN();  // missing entries only
  double max_angle = std::numeric_limits<double>::quiet_NaN();  // vs matched true subspaces
  int khat = 0;
  int iterations = 0;
  std::string termination;
  double wall_seconds = 0.0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<RunRecord> records;         // one per (p, seed), config order
  std::vector<OptimizationTrace> traces;  // parallel to records
  std::vector<CurvePoint> curve;          // one per p, successful runs only
};

// || truth - completed ||_F / || truth ||_F restricted to !mask; 0 when fully
// observed.
double completion_error_missing(
    const Eigen::MatrixXd& truth, const Eigen::MatrixXd& completed,
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);

// Largest principal angle between each estimated subspace and the true basis
// its cluster matches under the optimal confusion-matrix assignment; NaN when
// no pair matches.
double max_matched_subspace_angle(const std::vector<SubspaceEstimate>& subs, const Labeling& yhat,
                                  const Labeling& y, const std::vector<StiefelPoint>& true_bases);

RunReport run_experiment(const ExperimentConfig& cfg);

// Writes curve.csv, trace_p<i>_seed<seed>.csv per run, and summary.json into
// dir (created when absent).
void emit_outputs(const RunReport& report, const std::string& dir);

}  // namespace gf
