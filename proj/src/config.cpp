#include "tpsurv/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace tpsurv {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "key `" + key + "`: expected a boolean, got `" + value + "`");
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key, "key `" + key + "`: expected a number, got `" + value + "`");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long x = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key, "key `" + key + "`: expected an integer, got `" + value + "`");
  }
}

void apply_key(ScenarioSpec& spec, const std::string& key, const std::string& value) {
  if (key == "n") spec.n = static_cast<int>(parse_int(key, value));
  else if (key == "p") spec.p = static_cast<int>(parse_int(key, value));
  else if (key == "r") spec.r = parse_real(key, value);
  else if (key == "scenario") {
    const auto s = coef_scenario_from_name(value);
    if (!s) throw ConfigError(key, "key `scenario`: expected I, II, or III");
    spec.coefficient_scenario = *s;
  } else if (key == "v-kind") {
    const auto v = v_mode_from_name(value);
    if (!v) throw ConfigError(key, "key `v-kind`: expected binary, continuous, or pair");
    spec.v_kind = *v;
  } else if (key == "mechanism") {
    const auto m = mechanism_from_name(value);
    if (!m) throw ConfigError(key, "key `mechanism`: expected mcar, mar, or mar-viol");
    spec.mechanism = *m;
  } else if (key == "censor-rate") spec.censor_rate = parse_real(key, value);
  else if (key == "ph-violation") spec.ph_violation = parse_bool(key, value);
  else if (key == "ph-attenuation") spec.ph_attenuation = parse_real(key, value);
  else if (key == "replications") spec.replications = static_cast<int>(parse_int(key, value));
  else if (key == "seed") spec.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "beta-v") spec.beta_v = parse_real(key, value);
  else if (key == "v-independent") spec.v_independent = parse_bool(key, value);
  else if (key == "methods") {
    spec.method_set.clear();
    for (const auto& name : split_list(value)) {
      const auto m = method_from_name(name);
      if (!m) throw ConfigError(key, "key `methods`: unknown method `" + name + "`");
      spec.method_set.push_back(*m);
    }
  } else if (key == "retain") {
    spec.domain_knowledge.retained_u_indices.clear();
    for (const auto& item : split_list(value)) {
      const long long idx = parse_int(key, item);
      if (idx < 1) throw ConfigError(key, "key `retain`: indices are 1-based");
      spec.domain_knowledge.retained_u_indices.push_back(static_cast<int>(idx - 1));
    }
  } else if (key == "force-v") spec.domain_knowledge.force_v = parse_bool(key, value);
  else if (key == "pi-only") spec.domain_knowledge.pi_only = parse_bool(key, value);
  else if (key == "dk-for-comparison")
    spec.domain_knowledge.apply_to_comparison_methods = parse_bool(key, value);
  else if (key == "mi-imputations")
    spec.method_config.mi_imputations = static_cast<int>(parse_int(key, value));
  else if (key == "bartlett-sweeps")
    spec.method_config.bartlett_sweeps = static_cast<int>(parse_int(key, value));
  else if (key == "cv-folds")
    spec.method_config.cv_folds = static_cast<int>(parse_int(key, value));
  else if (key == "lambda-grid")
    spec.method_config.lambda_grid_size = static_cast<int>(parse_int(key, value));
  else if (key == "delta-grid") {
    spec.method_config.delta_grid.clear();
    for (const auto& item : split_list(value))
      spec.method_config.delta_grid.push_back(parse_real(key, item));
  } else {
    throw ConfigError(key, "unknown config key `" + key + "`");
  }
}

}  // namespace

std::vector<ScenarioSpec> parse_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file: " + path);

  std::vector<std::pair<std::string, std::string>> defaults;
  std::vector<ScenarioSpec> cells;
  bool in_cell = false;

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError(s, path + ":" + std::to_string(line_no) + ": unterminated section");
      std::string header = trim(s.substr(1, s.size() - 2));
      std::string name = header;
      if (header.rfind("cell", 0) == 0) name = trim(header.substr(4));
      if (name.empty()) name = "cell" + std::to_string(cells.size() + 1);
      ScenarioSpec spec;
      spec.name = name;
      for (const auto& [k, v] : defaults) apply_key(spec, k, v);
      cells.push_back(std::move(spec));
      in_cell = true;
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(s, path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (in_cell) apply_key(cells.back(), key, value);
    else {
      // Validate eagerly so a bad default reports the right key.
      ScenarioSpec probe;
      apply_key(probe, key, value);
      defaults.emplace_back(key, value);
    }
  }
  if (cells.empty())
    throw ConfigError("cell", path + ": config defines no [cell ...] sections");
  for (auto& spec : cells) {
    try {
      spec.validate();
    } catch (const std::exception& e) {
      throw ConfigError(spec.name, "cell `" + spec.name + "`: " + e.what());
    }
  }
  return cells;
}

}  // namespace tpsurv
