#include "grassfusion/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "grassfusion/errors.hpp"

namespace gf {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool is_nan_token(const std::string& s) {
  if (s.size() != 3) return false;
  return std::tolower(static_cast<unsigned char>(s[0])) == 'n' &&
         std::tolower(static_cast<unsigned char>(s[1])) == 'a' &&
         std::tolower(static_cast<unsigned char>(s[2])) == 'n';
}

}  // namespace

MaskedMatrix parse_masked_csv(const std::string& text) {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<bool>> mask;

  std::stringstream ss(text);
  std::string line;
  int row = 0;
  std::size_t width = 0;
  while (std::getline(ss, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row > 1 && trim(line).empty() && ss.peek() == EOF) break;  // trailing newline

    std::vector<double> vrow;
    std::vector<bool> mrow;
    std::size_t start = 0;
    int col = 0;
    while (true) {
      ++col;
      const auto comma = line.find(',', start);
      const std::string cell =
          trim(comma == std::string::npos ? line.substr(start) : line.substr(start, comma - start));
      if (cell.empty() || is_nan_token(cell)) {
        vrow.push_back(0.0);
        mrow.push_back(false);
      } else {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != cell.size())
          throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                           ": non-numeric cell '" + cell + "'");
        if (std::isnan(v)) {
          vrow.push_back(0.0);
          mrow.push_back(false);
        } else {
          vrow.push_back(v);
          mrow.push_back(true);
        }
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }

    if (values.empty()) {
      width = vrow.size();
    } else if (vrow.size() != width) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(width) +
                       " columns, found " + std::to_string(vrow.size()));
    }
    values.push_back(std::move(vrow));
    mask.push_back(std::move(mrow));
  }

  if (values.empty()) throw ParseError("empty matrix file");

  MaskedMatrix out;
  out.values.resize(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(width));
  out.mask.resize(out.values.rows(), out.values.cols());
  for (Eigen::Index i = 0; i < out.values.rows(); ++i)
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
      out.values(i, j) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out.mask(i, j) = mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  return out;
}

MaskedMatrix load_masked_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open matrix file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_masked_csv(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open for writing: " + path);
  out << contents;
  if (!out) throw FileError("write failed: " + path);
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
  std::string s = "p,mean_error,std_error,p_star\n";
  for (const auto& pt : points) {
    s += format_double(pt.p);
    s += ',';
    s += format_double(pt.mean_error);
    s += ',';
    s += format_double(pt.std_error);
    s += ',';
    s += format_double(pt.p_star);
    s += '\n';
  }
  write_text_file(path, s);
}

void write_trace_csv(const std::string& path, const OptimizationTrace& trace) {
  std::string s = "iteration,objective,chordal_sum,geodesic_sum,grad_norm,eta\n";
  for (const auto& row : trace.rows) {
    s += std::to_string(row.iteration);
    s += ',';
    s += format_double(row.objective);
    s += ',';
    s += format_double(row.chordal_sum);
    s += ',';
    s += format_double(row.geodesic_sum);
    s += ',';
    s += format_double(row.grad_norm);
    s += ',';
    s += format_double(row.eta);
    s += '\n';
  }
  write_text_file(path, s);
}

}  // namespace gf
