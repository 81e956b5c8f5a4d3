#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfst/ifs.hpp"
#include "mfst/log_value.hpp"

namespace mfst {

inline constexpr double kDefaultCdfTol = 1e-13;

// mu(A) = sum_i p_i mu(psi_i^{-1}(A)) over a validated IfsSystem.
class SelfSimilarMeasure {
 public:
  // Weights must be finite, strictly positive and sum to 1 within 1e-12.
  static SelfSimilarMeasure create(IfsSystem system, std::vector<double> weights);

  const IfsSystem& system() const noexcept { return system_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> log_weights() const noexcept { return log_weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double log_weight(std::size_t i) const { return log_weights_[i]; }
  double max_weight() const noexcept { return max_weight_; }

  // log p_w, summed left to right.
  double log_word_weight(std::span<const Letter> word) const;

 private:
  SelfSimilarMeasure(IfsSystem system, std::vector<double> weights);

  IfsSystem system_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  double max_weight_ = 0.0;
};

// [s - a(t-s)/2, t + a(t-s)/2]; never clipped to [0,1].
struct EnlargedInterval {
  Interval base;
  double factor = 0.0;
  Interval extent() const noexcept {
    const double half = 0.5 * factor * base.length();
    return Interval{base.lo - half, base.hi + half};
  }
};

EnlargedInterval enlarge(Interval iv, double a);

// F_mu(x) = mu([0,x]) within tol. Exact when the descent lands in a gap.
double cdf(const SelfSimilarMeasure& mu, double x, double tol = kDefaultCdfTol);

// cdf(hi) - cdf(lo) clamped to [0,1]; error <= 2 tol. Throws EmptyIntervalError.
double interval_measure(const SelfSimilarMeasure& mu, Interval iv, double tol = kDefaultCdfTol);

// mu(psi_w([lo,hi])) / p_w with relative (not absolute) precision. The
// interval is in the local coordinates of the cell psi_w[0,1] and may reach
// outside it; mass outside the root [0,1] is ignored.
double relative_measure(const SelfSimilarMeasure& mu, std::span<const Letter> word, double lo,
                        double hi);

// mu(ψ_w(E_gap) enlarged by a), as log p_w + log relative_measure.
double log_enlarged_gap_measure(const SelfSimilarMeasure& mu, std::span<const Letter> word,
                                std::size_t gap_index, double a);

struct GridCell {
  double scale = 1.0;
  std::int64_t index = 0;
  Interval interval() const noexcept {
    return Interval{static_cast<double>(index) * scale, static_cast<double>(index + 1) * scale};
  }
};

// Cells [mr,(m+1)r] whose interior meets the support, ordered by index.
std::vector<GridCell> grid_cells_star(const SelfSimilarMeasure& mu, double r,
                                      double tol = kDefaultCdfTol);

// mu of each cell enlarged by b, in cell order, to relative precision.
std::vector<double> enlarged_cell_measures(const SelfSimilarMeasure& mu,
                                           std::span<const GridCell> cells, double b,
                                           unsigned threads = 1);

// For 0 <= a <= b: mu(B^a) and mu(B^b) per cell, with mu(B^b) built as
// mu(B^a) plus the two side extensions so that mu(B^b) >= mu(B^a) holds
// exactly in floating point.
struct NestedMeasures {
  std::vector<double> inner;
  std::vector<double> outer;
};
NestedMeasures nested_cell_measures(const SelfSimilarMeasure& mu, std::span<const GridCell> cells,
                                    double a, double b, unsigned threads = 1);

// sum_B mu(B)^q over positive measures, in the given order.
LogValue log_power_sum(std::span<const double> measures, double q);

// log sum_{B in B_r^*} mu(B^b)^q. Throws NegativeQUnenlargedError for q < 0, b = 0.
LogValue grid_moment_sum(const SelfSimilarMeasure& mu, double r, double q, double b,
                         double tol = kDefaultCdfTol, unsigned threads = 1);

// Per-gap data for interval sums: log |I_n| and log mu(I_n enlarged by a).
struct GapLogs {
  double log_length = 0.0;
  double log_measure = 0.0;
};
std::vector<GapLogs> gap_logs(const SelfSimilarMeasure& mu, std::span<const GapInterval> gaps,
                              double a, unsigned threads = 1);

// log sum_{|I_n| >= delta} mu(I_n^a)^q |I_n|^beta, summed in gap-id order.
LogValue interval_moment_sum(const SelfSimilarMeasure& mu, double delta, double q, double beta,
                             double a, double tol = kDefaultCdfTol,
                             const EnumerationLimits& limits = {});

}  // namespace mfst
