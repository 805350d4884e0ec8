#pragma once

#include <string>
#include <vector>

#include "grassfusion/complete.hpp"
#include "grassfusion/objective.hpp"

namespace gf {

// CSV matrix ingestion: rows = features, columns = samples.
// Empty cells or the token NaN (case-insensitive) mark missing entries.
MaskedMatrix parse_masked_csv(const std::string& text);
MaskedMatrix load_masked_matrix(const std::string& path);

struct CurvePoint {
  double p = 0.0;
  double mean_error = 0.0;
  double std_error = 0.0;
  double p_star = 0.0;
};

// Shortest round-trip decimal formatting so identical doubles always print
// identically regardless of locale or stream state.
std::string format_double(double v);

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points);
void write_trace_csv(const std::string& path, const OptimizationTrace& trace);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace gf
