#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfst_cli {

// Any problem with the config file or the flags; exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceCutoff {
  bool magnitude = true;
  double value = 0.0;  // 0: derive from the smallest interval cutoff
};

struct RunConfig {
  std::vector<double> ratios;
  std::vector<double> translations;
  std::vector<double> weights;  // empty: uniform
  std::vector<double> q_grid;
  std::optional<double> enlargement;  // empty: "auto"
  double grid_enlargement = 1.0;
  std::vector<double> cutoffs;      // interval beta; empty: default ladder
  std::vector<double> grid_scales;  // grid beta; empty: powers of the largest ratio
  double smallest_cutoff = 1e-7;
  TraceCutoff trace_cutoff;
  int quadrature_depth = 0;  // 0: smallest depth with cell diameter <= 1e-6
  int lacunarity_depth = 8;
  double cdf_tol = 1e-13;
  double root_tol = 1e-12;
  std::int64_t seed = 0;
  std::size_t capacity = 100'000'000;
  std::string output = ".";
};

// One "key = value" per line; values are JSON literals, and a number may
// also be written as a string "a/b". '#' starts a comment line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace mfst_cli
