#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfst/ifs.hpp"
#include "mfst/measure.hpp"
#include "mfst/spectral.hpp"

namespace mfst {

// nu(A) = sum_i w_i nu(psi_i^{-1}(A)) with w_i = p_i^q r_i^beta.
struct AuxiliaryMeasure {
  IfsSystem system;
  std::vector<double> weights;
  bool normalized = false;  // |sum w_i - 1| <= 1e-10, true at beta = beta(q)
};

AuxiliaryMeasure nu_weights(const SelfSimilarMeasure& mu, double q, double beta);

// A function on [0,1] with the data the quadrature and the trace need.
struct TestFunction {
  std::string name;
  std::function<double(double)> eval;
  double lipschitz = 0.0;  // +inf when discontinuous
  double sup_norm = 0.0;   // sup |f| on [0,1]
  bool is_zero = false;
  // Indicator of this cell: midpoint quadrature at depth >= |cell| is exact.
  Word cell;
  bool is_cell_indicator = false;
  bool is_constant = false;
  double constant = 0.0;

  static TestFunction constant_function(double value);
  static TestFunction identity();
  // 1 on psi_w[0,1], 0 elsewhere. The open variant drops the two cell
  // endpoints, which are endpoints of gaps outside the cell; it sees exactly
  // the scaled copy of the whole gap sequence.
  static TestFunction cell_indicator(const IfsSystem& ifs, Word word, bool closed = true);
  // max(0, 1 - |x - center| / half_width).
  static TestFunction hat(double center, double half_width);
};

struct QuadratureResult {
  double value = 0.0;
  double error_bound = 0.0;
};

// sum over |w| = depth of nu(psi_w[0,1]) f(midpoint). The bound is
// lipschitz * max cell diameter, 0 for constants and for cell indicators at
// depth >= |cell|, and sup_norm for other discontinuous f.
QuadratureResult integrate_nu(const TestFunction& f, const AuxiliaryMeasure& nu, int depth,
                              unsigned threads = 1);

struct WeightedTrace {
  TraceEstimate positive;  // trace of f+ weighted values; zero when f+ vanishes there
  TraceEstimate negative;
  double point = 0.0;  // positive.point - negative.point
  double band_lo = 0.0;
  double band_hi = 0.0;
};

// Each singular value is multiplied by f at its own endpoint, the products
// are split by sign, re-sorted, and traced separately. Only values above the
// set's completeness floor times sup |f| are used. Throws TooFewValuesError
// when a nonempty part has fewer than 100 values.
WeightedTrace weighted_trace(const TestFunction& f, const SingularValueSet& set);
WeightedTrace weighted_trace(const TestFunction& f, const SelfSimilarMeasure& mu, double q,
                             double a, SpectrumCutoff cutoff,
                             const EnumerationLimits& limits = {});

struct IntegralReport {
  double q = 0.0;
  double beta = 0.0;
  double c = 0.0;
  double lhs_point = 0.0;
  double lhs_band_lo = 0.0;
  double lhs_band_hi = 0.0;
  double integral = 0.0;        // integral of f dnu
  double integral_error = 0.0;  // quadrature bound
  double rhs = 0.0;             // c * integral
  double rel_discrepancy = 0.0; // |lhs - rhs| / |rhs|, absolute when rhs = 0
  double budget = 0.0;          // trace band width plus |c| * quadrature bound, relative to |rhs|
};

// Both sides of trace(f G^q |D|^-beta(q)) = c * integral f dnu, with beta =
// beta(q) and c from renewal_constants.
IntegralReport verify_integral(const TestFunction& f, const SelfSimilarMeasure& mu, double q,
                               double a, SpectrumCutoff cutoff, int depth,
                               const EnumerationLimits& limits = {});

}  // namespace mfst
