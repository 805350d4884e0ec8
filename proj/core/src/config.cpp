#include "grassfusion/config.hpp"

#include <charconv>
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

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number from '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse integer from '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': cannot parse boolean from '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");

    if (key == "mode") {
      cfg.mode = value;
    } else if (key == "m") {
      cfg.m = parse_int(key, value);
    } else if (key == "r") {
      cfg.r = parse_int(key, value);
    } else if (key == "K") {
      cfg.K = parse_int(key, value);
    } else if (key == "n_per_cluster") {
      cfg.n_per_cluster = parse_int(key, value);
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = parse_double(key, value);
    } else if (key == "file") {
      cfg.file = value;
    } else if (key == "p_list") {
      cfg.p_list.clear();
      for (const auto& item : split_list(value)) cfg.p_list.push_back(parse_double(key, item));
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& item : split_list(value))
        cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
    } else if (key == "lambda") {
      cfg.lambda = parse_double(key, value);
    } else if (key == "eta0") {
      cfg.opt.eta0 = parse_double(key, value);
    } else if (key == "beta") {
      cfg.opt.beta = parse_double(key, value);
    } else if (key == "gamma") {
      cfg.opt.gamma = parse_double(key, value);
    } else if (key == "grad_tol") {
      cfg.opt.grad_tol = parse_double(key, value);
    } else if (key == "max_iters") {
      cfg.opt.max_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "max_backtracks") {
      cfg.opt.max_backtracks = static_cast<int>(parse_int(key, value));
    } else if (key == "k") {
      cfg.k = static_cast<int>(parse_int(key, value));
    } else if (key == "bandwidth") {
      cfg.bandwidth = parse_double(key, value);
    } else if (key == "k_max") {
      cfg.k_max = static_cast<int>(parse_int(key, value));
    } else if (key == "n_prime") {
      cfg.n_prime = parse_int(key, value);
    } else if (key == "m_prime") {
      cfg.m_prime = parse_int(key, value);
    } else if (key == "residual_threshold") {
      cfg.residual_threshold = parse_double(key, value);
    } else if (key == "refine_unassigned") {
      cfg.refine_unassigned = parse_bool(key, value);
    } else if (key == "als_tol") {
      cfg.als_tol = parse_double(key, value);
    } else if (key == "als_max_iters") {
      cfg.als_max_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "quiet") {
      cfg.quiet = parse_bool(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.mode != "synthetic" && cfg.mode != "file")
    throw ConfigError("config key 'mode': must be 'synthetic' or 'file', got '" + cfg.mode + "'");
  if (cfg.mode == "file" && cfg.file.empty())
    throw ConfigError("config key 'file': required in file mode");
  if (cfg.r < 1) throw ConfigError("config key 'r': must be >= 1");
  if (cfg.mode == "synthetic") {
    if (cfg.m < cfg.r) throw ConfigError("config key 'm': must be >= r");
    if (cfg.K < 1) throw ConfigError("config key 'K': must be >= 1");
    if (cfg.n_per_cluster < 1) throw ConfigError("config key 'n_per_cluster': must be >= 1");
  }
  if (cfg.noise_sigma < 0) throw ConfigError("config key 'noise_sigma': must be >= 0");
  if (cfg.p_list.empty()) throw ConfigError("config key 'p_list': must not be empty");
  for (double p : cfg.p_list)
    if (!(p > 0.0) || p > 1.0)
      throw ConfigError("config key 'p_list': entries must lie in (0, 1]");
  // an empty seed list is allowed: the sweep runs nothing and writes
  // header-only outputs
  if (cfg.lambda < 0) throw ConfigError("config key 'lambda': must be >= 0");
  if (cfg.opt.eta0 <= 0) throw ConfigError("config key 'eta0': must be > 0");
  if (cfg.opt.beta <= 0 || cfg.opt.beta >= 1)
    throw ConfigError("config key 'beta': must lie in (0, 1)");
  if (cfg.opt.gamma <= 0 || cfg.opt.gamma >= 1)
    throw ConfigError("config key 'gamma': must lie in (0, 1)");
  if (cfg.opt.grad_tol <= 0) throw ConfigError("config key 'grad_tol': must be > 0");
  if (cfg.opt.max_iters < 0) throw ConfigError("config key 'max_iters': must be >= 0");
  if (cfg.opt.max_backtracks < 0) throw ConfigError("config key 'max_backtracks': must be >= 0");
  if (cfg.k < 0) throw ConfigError("config key 'k': must be >= 0 (0 = auto)");
  if (cfg.k_max < 2) throw ConfigError("config key 'k_max': must be >= 2");
  if (cfg.n_prime < 0) throw ConfigError("config key 'n_prime': must be >= 0 (0 = all)");
  if (cfg.m_prime < 0) throw ConfigError("config key 'm_prime': must be >= 0 (0 = all)");
  if (cfg.residual_threshold < 0)
    throw ConfigError("config key 'residual_threshold': must be >= 0");
  if (cfg.als_tol <= 0) throw ConfigError("config key 'als_tol': must be > 0");
  if (cfg.als_max_iters < 1) throw ConfigError("config key 'als_max_iters': must be >= 1");
  if (cfg.threads < 1) throw ConfigError("config key 'threads': must be >= 1");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace gf
