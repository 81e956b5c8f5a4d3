#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mfst_cli {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

double parse_plain(const std::string& key, std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double x = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || end != s.data() + s.size()) bad(key, "not a number: " + std::string(s));
  return x;
}

// A JSON number, or a string "a/b" for values like 1/3 that have no short decimal.
double number(const std::string& key, const json& v) {
  double x = 0.0;
  if (v.is_number()) {
    x = v.get<double>();
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) {
      x = parse_plain(key, s);
    } else {
      const double den = parse_plain(key, std::string_view(s).substr(slash + 1));
      if (den == 0.0) bad(key, "zero denominator");
      x = parse_plain(key, std::string_view(s).substr(0, slash)) / den;
    }
  } else {
    bad(key, "expected a number");
  }
  if (!std::isfinite(x)) bad(key, "not finite");
  return x;
}

std::vector<double> number_list(const std::string& key, const json& v) {
  if (!v.is_array()) bad(key, "expected a list");
  std::vector<double> out;
  for (const json& x : v) out.push_back(number(key, x));
  return out;
}

// A list, or {"start": s, "factor": f, "count": n} for s, s f, ..., s f^(n-1).
std::vector<double> cutoff_list(const std::string& key, const json& v) {
  std::vector<double> out;
  if (v.is_object()) {
    for (const auto& [k, _] : v.items()) {
      if (k != "start" && k != "factor" && k != "count") bad(key, "unknown field " + k);
    }
    if (!v.contains("start") || !v.contains("factor") || !v.contains("count")) {
      bad(key, "geometric form needs start, factor and count");
    }
    const double start = number(key, v["start"]);
    const double factor = number(key, v["factor"]);
    if (!v["count"].is_number_integer() || v["count"].get<long long>() < 1 ||
        v["count"].get<long long>() > 200) {
      bad(key, "count must be an integer in 1..200");
    }
    if (!(factor > 0.0 && factor < 1.0)) bad(key, "factor must lie in (0,1)");
    double d = start;
    for (long long k = 0; k < v["count"].get<long long>(); ++k, d *= factor) out.push_back(d);
  } else {
    out = number_list(key, v);
  }
  if (out.empty()) bad(key, "empty");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) bad(key, "cutoffs must be positive");
    if (i > 0 && !(out[i] < out[i - 1])) bad(key, "cutoffs must decrease");
  }
  return out;
}

int integer(const std::string& key, const json& v, int lo, int hi) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi) bad(key, "out of range " + std::to_string(lo) + ".." + std::to_string(hi));
  return static_cast<int>(x);
}

void apply(RunConfig& cfg, const std::string& key, const json& v, bool& have_ifs, bool& have_q) {
  if (key == "ifs") {
    if (!v.is_array() || v.size() < 2) bad(key, "expected a list of at least two [ratio, translation] pairs");
    for (const json& pair : v) {
      if (!pair.is_array() || pair.size() != 2) bad(key, "each map is [ratio, translation]");
      cfg.ratios.push_back(number(key, pair[0]));
      cfg.translations.push_back(number(key, pair[1]));
    }
    have_ifs = true;
  } else if (key == "weights") {
    cfg.weights = number_list(key, v);
  } else if (key == "q_grid") {
    cfg.q_grid = number_list(key, v);
    if (cfg.q_grid.empty()) bad(key, "empty");
    have_q = true;
  } else if (key == "enlargement") {
    if (v.is_string() && v.get<std::string>() == "auto") {
      cfg.enlargement.reset();
    } else {
      cfg.enlargement = number(key, v);
      if (*cfg.enlargement < 0.0) bad(key, "must be >= 0 or \"auto\"");
    }
  } else if (key == "grid_enlargement") {
    cfg.grid_enlargement = number(key, v);
    if (cfg.grid_enlargement < 0.0) bad(key, "must be >= 0");
  } else if (key == "cutoffs") {
    cfg.cutoffs = cutoff_list(key, v);
  } else if (key == "grid_scales") {
    cfg.grid_scales = cutoff_list(key, v);
  } else if (key == "smallest_cutoff") {
    cfg.smallest_cutoff = number(key, v);
    if (!(cfg.smallest_cutoff > 0.0 && cfg.smallest_cutoff < 1.0)) bad(key, "must lie in (0,1)");
  } else if (key == "trace_cutoff") {
    if (!v.is_object() || v.size() != 1) bad(key, "expected {\"magnitude\": tau} or {\"length\": delta}");
    const auto& [kind, value] = *v.items().begin();
    if (kind != "magnitude" && kind != "length") bad(key, "unknown kind " + kind);
    cfg.trace_cutoff.magnitude = kind == "magnitude";
    cfg.trace_cutoff.value = number(key, value);
    if (!(cfg.trace_cutoff.value > 0.0)) bad(key, "must be positive");
  } else if (key == "quadrature_depth") {
    cfg.quadrature_depth = integer(key, v, 1, 40);
  } else if (key == "lacunarity_depth") {
    cfg.lacunarity_depth = integer(key, v, 1, 16);
  } else if (key == "tolerances") {
    if (!v.is_object()) bad(key, "expected {\"cdf\": x, \"root\": y}");
    for (const auto& [k, x] : v.items()) {
      if (k == "cdf") {
        cfg.cdf_tol = number(key, x);
      } else if (k == "root") {
        cfg.root_tol = number(key, x);
      } else {
        bad(key, "unknown field " + k);
      }
    }
    // The library evaluates the cdf to 1e-13 and roots to adjacent doubles,
    // which meets any tolerance in these ranges.
    if (!(cfg.cdf_tol >= 1e-13 && cfg.cdf_tol <= 1e-3)) bad(key, "cdf must lie in [1e-13, 1e-3]");
    if (!(cfg.root_tol >= 1e-15 && cfg.root_tol <= 1e-3)) bad(key, "root must lie in [1e-15, 1e-3]");
  } else if (key == "seed") {
    if (!v.is_number_integer()) bad(key, "expected an integer");
    cfg.seed = v.get<std::int64_t>();
  } else if (key == "capacity") {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) bad(key, "expected a positive integer");
    cfg.capacity = v.get<std::size_t>();
  } else if (key == "output") {
    if (!v.is_string() || v.get<std::string>().empty()) bad(key, "expected a directory path");
    cfg.output = v.get<std::string>();
  } else {
    bad(key, "unknown key");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool have_ifs = false, have_q = false;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = line.substr(first, eq - first);
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    json value;
    try {
      value = json::parse(line.substr(eq + 1));
    } catch (const json::parse_error&) {
      throw ConfigError("line " + std::to_string(lineno) + ": value of '" + key +
                        "' is not a JSON literal");
    }
    apply(cfg, key, value, have_ifs, have_q);
  }
  if (!have_ifs) throw ConfigError("config key 'ifs' is required");
  if (!have_q) throw ConfigError("config key 'q_grid' is required");
  if (!cfg.weights.empty() && cfg.weights.size() != cfg.ratios.size()) {
    throw ConfigError("config key 'weights': one weight per map");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mfst_cli
