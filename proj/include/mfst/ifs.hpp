#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace mfst {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
};

// psi(x) = ratio * x + translation
struct Similarity {
  double ratio = 0.0;
  double translation = 0.0;

  double operator()(double x) const noexcept { return ratio * x + translation; }
  double left() const noexcept { return translation; }
  double right() const noexcept { return ratio + translation; }
};

// Gap E_i between the consecutive first-level cells psi_i[0,1] and psi_{i+1}[0,1].
struct TopGap {
  double left = 0.0;
  double right = 0.0;
  double length = 0.0;
};

// An ordered system of contracting similarities on [0,1] with strict gaps,
// psi_1(0) = 0 and psi_m(1) = 1. Immutable once validated.
class IfsSystem {
 public:
  // Throws RatioError, BoundaryError, OverlapError or ZeroGapError.
  static IfsSystem validate(std::span<const Similarity> maps);

  std::size_t size() const noexcept { return maps_.size(); }
  const Similarity& map(std::size_t i) const { return maps_[i]; }
  std::span<const Similarity> maps() const noexcept { return maps_; }
  std::span<const TopGap> gaps() const noexcept { return gaps_; }
  double log_ratio(std::size_t i) const { return log_ratios_[i]; }
  std::span<const double> log_ratios() const noexcept { return log_ratios_; }

  double max_gap() const noexcept { return max_gap_; }
  double min_gap() const noexcept { return min_gap_; }
  double max_ratio() const noexcept { return max_ratio_; }
  double min_ratio() const noexcept { return min_ratio_; }

 private:
  IfsSystem() = default;

  std::vector<Similarity> maps_;
  std::vector<TopGap> gaps_;
  std::vector<double> log_ratios_;
  double max_gap_ = 0.0;
  double min_gap_ = 0.0;
  double max_ratio_ = 0.0;
  double min_ratio_ = 0.0;
};

// Zero-based map indices.
using Letter = std::uint16_t;
using Word = std::vector<Letter>;

// r_w = r_{i1} * ... * r_{ik}, multiplied left to right.
double word_ratio(const IfsSystem& ifs, std::span<const Letter> word);
// psi_w(x) = psi_{i1}(psi_{i2}(... psi_{ik}(x))).
double apply_word(const IfsSystem& ifs, std::span<const Letter> word, double x);
Interval word_cell(const IfsSystem& ifs, std::span<const Letter> word);

// One complementary interval I_n = psi_w(E_gap_index).
struct GapInterval {
  std::size_t id = 0;
  double left = 0.0;
  double right = 0.0;
  double length = 0.0;
  Word word;
  std::size_t gap_index = 0;
};

// Lengths built as products of ratios drift by a few ulps from the exact
// value, so a gap exactly at the cutoff (3^-k on the Cantor system) is kept.
inline bool reaches_cutoff(double length, double delta) noexcept {
  return length >= delta * (1.0 - 8.0 * std::numeric_limits<double>::epsilon());
}

struct EnumerationLimits {
  std::size_t capacity = 100'000'000;
  unsigned threads = 1;
};

// All gaps psi_w(E_i) with r_w * eps_i >= delta (see reaches_cutoff), sorted by decreasing length,
// equal lengths ordered left to right. Throws CapacityError.
std::vector<GapInterval> enumerate_gaps(const IfsSystem& ifs, double delta,
                                        const EnumerationLimits& limits = {});

// As enumerate_gaps with empty words; for callers that only need geometry.
std::vector<GapInterval> enumerate_gap_extents(const IfsSystem& ifs, double delta,
                                               const EnumerationLimits& limits = {});

struct GapCount {
  double delta = 0.0;
  std::size_t count = 0;
};

// N(delta) = #{n : |I_n| >= delta} for each requested cutoff.
std::vector<GapCount> gap_count_profile(const IfsSystem& ifs, std::span<const double> deltas,
                                        const EnumerationLimits& limits = {});

// Sorted (descending) gap lengths down to delta; cheaper than enumerate_gaps
// when only lengths are needed.
std::vector<double> gap_lengths(const IfsSystem& ifs, double delta,
                                const EnumerationLimits& limits = {});

}  // namespace mfst
