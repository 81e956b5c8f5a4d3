// mfst: command-line front end over the C API.
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfst/mfst.h"
#include "run_config.hpp"

namespace {

using mfst_cli::ConfigError;
using mfst_cli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitInternal = 1;

// Agreement tolerances for the beta.csv flag.
constexpr double kGridAgreement = 0.03;
constexpr double kIntervalAgreement = 0.02;
// Default quadrature depth: cells no wider than this.
constexpr double kQuadratureDiameter = 1e-6;

struct LibraryError {
  mfst_status status;
  std::string message;
};

void check(mfst_status s) {
  if (s != MFST_OK) throw LibraryError{s, mfst_last_error()};
}

int exit_code(mfst_status s) {
  switch (s) {
    case MFST_E_CAPACITY:
    case MFST_E_OUT_OF_MEMORY:
      return kExitCapacity;
    case MFST_E_BRACKET:
    case MFST_E_TOO_FEW_VALUES:
    case MFST_E_NON_CONVERGED:
    case MFST_E_ZERO_MEASURE_SIDE:
      return kExitNumeric;
    case MFST_E_INTERNAL:
      return kExitInternal;
    default:
      return kExitConfig;
  }
}

struct SystemDeleter {
  void operator()(mfst_system* s) const { mfst_system_destroy(s); }
};
struct ValuesDeleter {
  void operator()(mfst_values* v) const { mfst_values_destroy(v); }
};
struct FunctionDeleter {
  void operator()(mfst_function* f) const { mfst_function_destroy(f); }
};
using System = std::unique_ptr<mfst_system, SystemDeleter>;
using Values = std::unique_ptr<mfst_values, ValuesDeleter>;
using Function = std::unique_ptr<mfst_function, FunctionDeleter>;

std::string fmt(double x) {
  char buf[64];
  check(mfst_format_double(x, buf, sizeof buf));
  return buf;
}

// Rounded to the 12 digits the CSVs carry, so JSON output agrees with them.
double rounded(double x) {
  if (!std::isfinite(x)) return x;
  const std::string s = fmt(x);
  double y = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), y);
  return y;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width");
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

// Whole file or nothing: written next to the target and renamed.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const auto target = dir / name;
  const auto tmp = dir / (name + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + tmp.string());
    f << text;
    if (!f) throw ConfigError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

struct Context {
  RunConfig cfg;
  System sys;
  mfst_limits limits{};
  unsigned threads = 1;
  double s = 0.0;
  double lambda = 0.0;
  double a = 0.0;
};

Context make_context(RunConfig cfg, unsigned threads) {
  Context ctx{std::move(cfg), nullptr, {}, threads};
  mfst_system* raw = nullptr;
  check(mfst_system_create(ctx.cfg.ratios.data(), ctx.cfg.translations.data(),
                           ctx.cfg.weights.empty() ? nullptr : ctx.cfg.weights.data(),
                           ctx.cfg.ratios.size(), &raw));
  ctx.sys.reset(raw);
  ctx.limits = {ctx.cfg.capacity, threads};
  // s is the root of sum r_i^s = 1: beta at q = 0 does not see the weights.
  check(mfst_beta_closed(ctx.sys.get(), 0.0, &ctx.s));
  check(mfst_lacunarity(ctx.sys.get(), ctx.cfg.lacunarity_depth, &ctx.lambda));
  if (ctx.cfg.enlargement) {
    ctx.a = *ctx.cfg.enlargement;
  } else {
    check(mfst_auto_enlargement(ctx.lambda, &ctx.a));
  }
  return ctx;
}

double max_ratio(const Context& ctx) {
  double r = 0.0;
  for (std::size_t i = 0; i < mfst_system_size(ctx.sys.get()); ++i) {
    double ri = 0.0;
    check(mfst_system_map(ctx.sys.get(), i, &ri, nullptr, nullptr));
    r = std::max(r, ri);
  }
  return r;
}

std::vector<double> interval_cutoffs(const Context& ctx) {
  if (!ctx.cfg.cutoffs.empty()) return ctx.cfg.cutoffs;
  std::size_t n = 0;
  check(mfst_default_interval_cutoffs(ctx.sys.get(), ctx.cfg.smallest_cutoff, nullptr, 0, &n));
  std::vector<double> d(n);
  check(mfst_default_interval_cutoffs(ctx.sys.get(), ctx.cfg.smallest_cutoff, d.data(), n, &n));
  return d;
}

// Powers of the largest ratio. Grid cells that miss a cell boundary of the
// set by a few ulps still meet the support, and those slivers bias the slope
// by several hundredths on the Cantor system, so when 1/r is an integer the
// powers are formed as correctly rounded 1 / n^k.
std::vector<double> grid_scales(const Context& ctx) {
  if (!ctx.cfg.grid_scales.empty()) return ctx.cfg.grid_scales;
  const double r = max_ratio(ctx);
  const double inv = std::round(1.0 / r);
  const bool integral = std::abs(1.0 / r - inv) <= 1e-12 * inv;
  std::vector<double> out;
  double power = 1.0;
  for (int k = 1; k < 200; ++k) {
    power *= integral ? inv : 1.0;  // exact while n^k < 2^53
    const double x = integral && power < 9007199254740992.0 ? 1.0 / power : std::pow(r, k);
    if (x < ctx.cfg.smallest_cutoff) break;
    out.push_back(x);
  }
  return out;
}

int quadrature_depth(const Context& ctx) {
  if (ctx.cfg.quadrature_depth > 0) return ctx.cfg.quadrature_depth;
  return static_cast<int>(std::ceil(std::log(kQuadratureDiameter) / std::log(max_ratio(ctx))));
}

// Magnitude tau = smallest_cutoff^s by default: on a q = 0 spectrum that keeps
// exactly the gaps of length >= smallest_cutoff.
std::pair<mfst_cutoff_kind, double> trace_cutoff(const Context& ctx) {
  if (ctx.cfg.trace_cutoff.value > 0.0) {
    return {ctx.cfg.trace_cutoff.magnitude ? MFST_CUTOFF_MAGNITUDE : MFST_CUTOFF_LENGTH,
            ctx.cfg.trace_cutoff.value};
  }
  return {MFST_CUTOFF_MAGNITUDE, std::pow(ctx.cfg.smallest_cutoff, ctx.s)};
}

void cmd_validate(const Context& ctx) {
  using nlohmann::ordered_json;
  ordered_json out;
  const std::size_t m = mfst_system_size(ctx.sys.get());
  out["m"] = m;
  ordered_json maps = ordered_json::array(), gaps = ordered_json::array(),
               lengths = ordered_json::array();
  for (std::size_t i = 0; i < m; ++i) {
    double r = 0, t = 0, p = 0;
    check(mfst_system_map(ctx.sys.get(), i, &r, &t, &p));
    maps.push_back({{"ratio", rounded(r)}, {"translation", rounded(t)}, {"weight", rounded(p)}});
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    double l = 0, r = 0;
    check(mfst_system_gap(ctx.sys.get(), i, &l, &r));
    gaps.push_back({rounded(l), rounded(r)});
    lengths.push_back(rounded(r - l));
  }
  double set_c = 0.0;
  check(mfst_set_trace_constant(ctx.sys.get(), &set_c));
  out["maps"] = maps;
  out["gaps"] = gaps;
  out["gap_lengths"] = lengths;
  out["s"] = rounded(ctx.s);
  out["lacunarity"] = rounded(ctx.lambda);
  out["lacunarity_depth"] = ctx.cfg.lacunarity_depth;
  out["enlargement"] = rounded(ctx.a);
  out["set_trace_constant"] = rounded(set_c);
  std::cout << out.dump(2) << '\n';
}

std::string cmd_beta(const Context& ctx) {
  const auto& qs = ctx.cfg.q_grid;
  const auto scales = grid_scales(ctx);
  const auto deltas = interval_cutoffs(ctx);
  std::vector<mfst_beta_estimate> grid(qs.size()), interval(qs.size());
  check(mfst_beta_grid_scan(ctx.sys.get(), qs.data(), qs.size(), ctx.cfg.grid_enlargement,
                            scales.data(), scales.size(), ctx.threads, grid.data()));
  check(mfst_beta_interval_scan(ctx.sys.get(), qs.data(), qs.size(), ctx.a, deltas.data(),
                                deltas.size(), &ctx.limits, interval.data()));
  Csv csv({"q", "beta_closed", "beta_grid", "beta_grid_stderr", "beta_interval",
           "beta_interval_bracket", "agreement_flag"});
  for (std::size_t i = 0; i < qs.size(); ++i) {
    double closed = 0.0;
    check(mfst_beta_closed(ctx.sys.get(), qs[i], &closed));
    const bool agree = std::abs(grid[i].value - closed) <= kGridAgreement &&
                       std::abs(interval[i].value - closed) <= kIntervalAgreement;
    csv.row({fmt(qs[i]), fmt(closed), fmt(grid[i].value), fmt(grid[i].standard_error),
             fmt(interval[i].value), fmt(interval[i].bracket_width), agree ? "1" : "0"});
  }
  return csv.text();
}

std::string cmd_spectrum(const Context& ctx) {
  const auto& qs = ctx.cfg.q_grid;
  std::vector<double> betas(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) check(mfst_beta_closed(ctx.sys.get(), qs[i], &betas[i]));
  std::size_t n = 0;
  int convex = 0;
  std::vector<mfst_spectrum_point> pts(qs.size());
  check(mfst_legendre(qs.data(), betas.data(), qs.size(), pts.data(), pts.size(), &n, &convex));
  Csv csv({"q", "alpha", "f"});
  for (std::size_t i = 0; i < n && i < pts.size(); ++i) {
    csv.row({fmt(pts[i].q), fmt(pts[i].alpha), fmt(pts[i].f)});
  }
  return csv.text();
}

std::string cmd_trace(const Context& ctx) {
  const auto [kind, cutoff] = trace_cutoff(ctx);
  Csv csv({"q", "beta_used", "c_closed_form", "r0", "trace_point", "trace_band_lo",
           "trace_band_hi", "measurable_consistent"});
  for (double q : ctx.cfg.q_grid) {
    mfst_renewal rc{};
    check(mfst_renewal_constants(ctx.sys.get(), q, ctx.a, &ctx.limits, &rc));
    mfst_values* raw = nullptr;
    check(mfst_singular_values(ctx.sys.get(), q, rc.beta, ctx.a, kind, cutoff, MFST_SYMMETRIC,
                               &ctx.limits, &raw));
    const Values values(raw);
    mfst_trace t{};
    check(mfst_values_trace(values.get(), &t));
    csv.row({fmt(q), fmt(rc.beta), fmt(rc.c), fmt(rc.r0), fmt(t.point), fmt(t.band_lo),
             fmt(t.band_hi), t.measurable_consistent ? "1" : "0"});
  }
  return csv.text();
}

Function make_function(const Context& ctx, const std::string& name,
                       const std::vector<std::string>& fparams) {
  std::vector<std::string> keys, values;
  for (const auto& kv : fparams) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--fparam expects K=V, got " + kv);
    keys.push_back(kv.substr(0, eq));
    values.push_back(kv.substr(eq + 1));
  }
  std::vector<const char*> kp, vp;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    kp.push_back(keys[i].c_str());
    vp.push_back(values[i].c_str());
  }
  mfst_function* raw = nullptr;
  check(mfst_function_create(ctx.sys.get(), name.c_str(), kp.data(), vp.data(), kp.size(), &raw));
  return Function(raw);
}

std::string cmd_integral(const Context& ctx, const mfst_function* f) {
  const auto [kind, cutoff] = trace_cutoff(ctx);
  const int depth = quadrature_depth(ctx);
  Csv csv({"q", "lhs_trace", "rhs_c_nu", "rel_discrepancy", "budget"});
  for (double q : ctx.cfg.q_grid) {
    mfst_integral_report rep{};
    check(mfst_verify_integral(f, ctx.sys.get(), q, ctx.a, kind, cutoff, depth, &ctx.limits, &rep));
    csv.row({fmt(q), fmt(rep.lhs_point), fmt(rep.rhs), fmt(rep.rel_discrepancy), fmt(rep.budget)});
  }
  return csv.text();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multifractal spectral triples of self-similar measures"};
  std::string config_path, out_dir, command = "validate", function_name = "constant";
  std::vector<std::string> fparams;
  unsigned threads = 1;
  app.add_option("--config", config_path, "config file")->required();
  app.add_option("--out", out_dir, "output directory (default: the config's output key)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--command", command, "what to compute")
      ->check(CLI::IsMember({"validate", "beta", "spectrum", "trace", "integral"}));
  app.add_option("--function", function_name, "integral test function: constant, identity, indicator, hat");
  app.add_option("--fparam", fparams, "test function parameter K=V");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    Context ctx = make_context(mfst_cli::load_config(config_path), threads);
    const std::filesystem::path dir = out_dir.empty() ? ctx.cfg.output : out_dir;
    if (command == "validate") {
      cmd_validate(ctx);
    } else if (command == "beta") {
      write_file(dir, "beta.csv", cmd_beta(ctx));
    } else if (command == "spectrum") {
      write_file(dir, "spectrum.csv", cmd_spectrum(ctx));
    } else if (command == "trace") {
      write_file(dir, "trace.csv", cmd_trace(ctx));
    } else {
      const Function f = make_function(ctx, function_name, fparams);
      write_file(dir, "integral.csv", cmd_integral(ctx, f.get()));
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << '\n';
    return kExitConfig;
  } catch (const LibraryError& e) {
    std::cerr << e.message << '\n';
    return exit_code(e.status);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "ConfigError: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << '\n';
    return kExitInternal;
  }
}
