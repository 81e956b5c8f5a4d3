#pragma once

#include <span>
#include <vector>

#include "mfst/ifs.hpp"
#include "mfst/log_value.hpp"
#include "mfst/measure.hpp"

namespace mfst {

enum class BetaMethod { GridRegression, IntervalSlope, ClosedForm };

struct BetaEstimate {
  double q = 0.0;
  double value = 0.0;
  BetaMethod method = BetaMethod::ClosedForm;
  // Regression abscissae (-log r or -log delta) and residuals at the estimate.
  std::vector<double> abscissae;
  std::vector<double> residuals;
  double standard_error = 0.0;
  double bracket_width = 0.0;  // interval-slope method only
};

// Root of sum_i p_i^q r_i^beta = 1; exactly 0 at q = 1.
double beta_closed_form(std::span<const double> p, std::span<const double> r, double q);
double beta_closed_form(const SelfSimilarMeasure& mu, double q);

// Slope of log sum_{B in B_r^*} mu(B^b)^q against -log r.
// Throws InsufficientScalesError (fewer than 4 scales, or not decreasing) and
// NegativeQUnenlargedError.
BetaEstimate beta_grid_estimate(const SelfSimilarMeasure& mu, double q, double b,
                                std::span<const double> scales, unsigned threads = 1);
// Same estimate for several q, sharing the per-scale cell measures.
std::vector<BetaEstimate> beta_grid_scan(const SelfSimilarMeasure& mu, std::span<const double> qs,
                                         double b, std::span<const double> scales,
                                         unsigned threads = 1);

// Growth exponent of the interval sums: for each band delta_{k+1} <= |I_n| < delta_k
// the increment B_k(beta) = sum mu(I_n^a)^q |I_n|^beta is formed, and the slope
// of log B_k against -log delta_{k+1} is driven to zero by bisection on beta in
// [-50, 50]. The slope is positive below beta(q) and negative above it.
// Throws BracketError, InsufficientScalesError.
BetaEstimate beta_interval_estimate(const SelfSimilarMeasure& mu, double q, double a,
                                    std::span<const double> deltas,
                                    const EnumerationLimits& limits = {});
std::vector<BetaEstimate> beta_interval_scan(const SelfSimilarMeasure& mu,
                                             std::span<const double> qs, double a,
                                             std::span<const double> deltas,
                                             const EnumerationLimits& limits = {});

// Cutoffs 1.5 * max gap * 3^-k for k = 0.. while >= smallest. The first band
// then holds the largest gap, and on the Cantor system every band holds
// exactly one generation with no gap on a cutoff.
std::vector<double> default_interval_cutoffs(const IfsSystem& ifs, double smallest);

struct SpectrumPoint {
  double q = 0.0;
  double alpha = 0.0;
  double f = 0.0;
};

struct LegendreResult {
  std::vector<SpectrumPoint> points;
  bool convex = true;
  double worst_second_difference = 0.0;
};

// f(alpha) = min_q (beta(q) + q alpha) over the sampled q, at alpha from
// central differences -dbeta/dq at interior samples. Needs >= 5 samples with
// increasing q spanning both signs; coincident points are merged.
LegendreResult legendre_spectrum(std::span<const double> qs, std::span<const double> betas);

// Lower estimate of the lacunarity constant: min over endpoints x of the
// depth-d cells and dyadic r >= (min ratio)^d of (longest gap inside
// B(x,r)) / r. Nonincreasing in depth.
double lacunarity_estimate(const IfsSystem& ifs, int depth);

// max(6, ceil(2 / lambda)).
double auto_enlargement(double lambda);

struct SandwichScale {
  double r = 0.0;
  LogValue grid;   // sum over B_r^* of mu(B^b)^q
  LogValue lower;  // interval sum over lambda eta1 r <= |I_n| <= eta1 r
  LogValue upper;  // interval sum over lambda eta2 r <= |I_n| <= eta2 r
  double grid_over_lower = 0.0;
  double grid_over_upper = 0.0;
};

struct SandwichReport {
  double q = 0.0, a = 0.0, b = 0.0, lambda = 0.0;
  double eta1 = 0.0, eta2 = 0.0;
  bool precondition = false;  // a >= 2 / lambda
  std::vector<SandwichScale> scales;
  double c1 = 0.0;  // min grid / lower
  double c2 = 0.0;  // max grid / upper
  bool bounded = false;  // every ratio finite and inside [1/bound, bound]
};

SandwichReport sandwich_check(const SelfSimilarMeasure& mu, double q, double a, double b,
                              std::span<const double> scales, double lambda,
                              double bound = 1e6, const EnumerationLimits& limits = {});

struct InclusionScale {
  double r = 0.0;
  double sum_a = 0.0;  // linear sums, same cell order
  double sum_b = 0.0;
  bool ordered = false;  // sum_b >= sum_a for q >= 0, reversed for q < 0
  double ratio = 0.0;    // q >= 0: sum_a / sum_b; q < 0: sum_a / sum_b at scale r a / (2 + b)
};

struct InclusionReport {
  double q = 0.0, a = 0.0, b = 0.0;
  std::vector<InclusionScale> scales;
  bool all_ordered = false;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

// Monotone inclusion of enlarged grid sums for 0 <= a <= b (a > 0 when q < 0).
InclusionReport inclusion_check(const SelfSimilarMeasure& mu, double q, double a, double b,
                                std::span<const double> scales, unsigned threads = 1);

}  // namespace mfst
