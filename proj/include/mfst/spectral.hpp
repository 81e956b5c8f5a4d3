#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mfst/ifs.hpp"
#include "mfst/measure.hpp"

namespace mfst {

enum class EndpointTag : std::uint8_t { Left = 0, Right = 1 };

// One singular value mu(I_n^a)^q |I_n|^beta (or its one-sided variant),
// attached to the endpoint b_n^- (Left) or b_n^+ (Right) of gap gap_id.
struct SingularValue {
  double log_sigma = 0.0;  // -inf for a suppressed side
  std::size_t gap_id = 0;
  EndpointTag tag = EndpointTag::Left;
};

// Descending log_sigma, then ascending (gap_id, tag).
bool singular_value_order(const SingularValue& x, const SingularValue& y) noexcept;

enum class GapWeighting { Symmetric, OneSidedLeft, OneSidedRight };

// Which gaps are generated: every gap with |I_n| >= delta (Length), or every
// gap carrying a singular value >= tau (Magnitude).
struct SpectrumCutoff {
  enum class Kind { Length, Magnitude };
  Kind kind = Kind::Length;
  double value = 0.0;

  static SpectrumCutoff length(double delta) noexcept { return {Kind::Length, delta}; }
  static SpectrumCutoff magnitude(double tau) noexcept { return {Kind::Magnitude, tau}; }
};

struct SingularValueSet {
  std::vector<SingularValue> values;  // sorted by singular_value_order
  std::vector<Interval> gaps;         // [b_n^-, b_n^+] by gap id
  // Every singular value of the full operator that is >= exp(log_complete_above)
  // is in `values`. Below it the list may miss values, so it is not the head
  // of the true sorted sequence. +inf when nothing can be certified.
  double log_complete_above = 0.0;
  std::size_t suppressed = 0;   // one-sided sides set to zero
  std::size_t zero_sides = 0;   // sides whose enlarged measure underflowed, excluded

  // Leading values >= exp(log_complete_above); excludes zeros.
  std::span<const SingularValue> complete_prefix() const;
};

// Length mode enumerates like enumerate_gaps, so gap ids agree with its ids.
// Magnitude mode needs max_i p_i^q r_i^beta < 1 and visits a subtree only if
// a bound on its values reaches tau. The bound uses that mu(I^a) relative to
// the parent cell depends on the last few letters only; Throws CapacityError
// when that suffix table would be too large.
SingularValueSet singular_values(const SelfSimilarMeasure& mu, double q, double beta, double a,
                                 SpectrumCutoff cutoff,
                                 GapWeighting mode = GapWeighting::Symmetric,
                                 const EnumerationLimits& limits = {});

struct TracePoint {
  std::size_t n = 0;
  double ratio = 0.0;  // S_N / log N
};

struct TraceEstimate {
  std::vector<TracePoint> partial_ratios;  // checkpoints ceil(1.5^j) >= 2, then N
  double band_lo = 0.0;                    // over checkpoints with n >= N/10
  double band_hi = 0.0;
  double point = 0.0;                      // ratio at N
  double total = 0.0;                      // S_N
  std::size_t count = 0;                   // N
  bool measurable_consistent = false;      // band width / point < 5%
};

// Partial sums of a descending list, stopping at the first zero. Throws
// TooFewValuesError below 100 nonzero values and InvalidArgumentError when the
// list is not sorted.
TraceEstimate partial_sum_trace(std::span<const SingularValue> values);

struct DimensionEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::vector<GapCount> counts;
};

// Slope of log N(delta) against -log delta, with each cutoff moved up to the
// smallest gap length >= it so lattice staircases are sampled at their
// corners; `counts` holds the moved cutoffs. Needs >= 4 decreasing cutoffs
// spanning >= 3 decades, each counting at least one gap, and 4 distinct
// counts; throws InsufficientScalesError otherwise.
DimensionEstimate spectral_dimension_estimate(const IfsSystem& ifs, std::span<const double> deltas,
                                              const EnumerationLimits& limits = {});

struct MinkowskiPoint {
  double r = 0.0;
  double length = 0.0;      // L(F_r), the r-neighbourhood of F
  double normalized = 0.0;  // L(F_r) / r^(1-s)
};

// L(F_r) = 1 + 2r - sum_{|I_n| > 2r} (|I_n| - 2r). rs must be decreasing.
std::vector<MinkowskiPoint> minkowski_profile(const IfsSystem& ifs, std::span<const double> rs,
                                              double s, const EnumerationLimits& limits = {});

struct RenewalConstants {
  double q = 0.0;
  double beta = 0.0;
  double a = 0.0;
  double first_term = 0.0;   // sum over I_n inside psi_i[0,1] of the rescaling defect
  double second_term = 0.0;  // sum over top gaps of |E_i|^beta mu(E_i^a)^q
  double r0 = 0.0;
  double entropy_denominator = 0.0;  // sum w_i log(1/w_i), w_i = p_i^q r_i^beta
  double c = 0.0;                    // 2 r0 / entropy_denominator
  std::size_t gaps_examined = 0;
};

// beta is beta_closed_form(mu, q). The rescaling defect of I_n vanishes once
// a|I_n| < min gap; gaps are examined one ratio level below that, and a
// nonzero defect there throws NonConvergedError.
RenewalConstants renewal_constants(const SelfSimilarMeasure& mu, double q, double a,
                                   const EnumerationLimits& limits = {});

// 2 sum eps_i^s / sum r_i^s log(1/r_i): the set-theoretic trace constant
// written in terms of the gap lengths and ratios alone.
double set_trace_constant(const IfsSystem& ifs);

struct RenewalPoint {
  double tau = 0.0;
  double s = 0.0;             // S(tau), one value per gap
  double s_over_log = 0.0;    // S(tau) / -log tau
  std::size_t s1 = 0;         // S_1(tau), gaps with sigma >= tau
  double tau_s1 = 0.0;
  double r = 0.0;             // r(tau)
};

struct RenewalReport {
  double q = 0.0, beta = 0.0, a = 0.0;
  double r0 = 0.0;
  double target = 0.0;  // r0 / entropy_denominator, the limit of S(tau)/-log tau
  std::vector<RenewalPoint> points;
  // First index from which r(tau) equals r0 to 1e-12 relative; npos if never.
  std::size_t r_stable_from = static_cast<std::size_t>(-1);
  double tau_s1_spread = 0.0;  // max / min of tau S_1 over all points
  double decades = 0.0;        // log10(taus.front() / taus.back())
};

// r(tau) is the exact difference S(tau) - sum_i w_i S(tau / w_i), which is a
// finite sum over the gaps with a nonzero rescaling defect and the top gaps.
RenewalReport renewal_diagnostic(const SelfSimilarMeasure& mu, double q, double beta, double a,
                                 std::span<const double> taus,
                                 const EnumerationLimits& limits = {});

}  // namespace mfst
