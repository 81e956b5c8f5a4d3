#include "mfst/multifractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfst/detail/parallel.hpp"
#include "mfst/detail/regression.hpp"
#include "mfst/detail/traversal.hpp"
#include "mfst/errors.hpp"

namespace mfst {
namespace {

constexpr double kBetaLo = -50.0;
constexpr double kBetaHi = 50.0;
constexpr double kBracketWidth = 1e-8;

void require_decreasing(std::span<const double> xs, std::size_t min_count, const char* what) {
  if (xs.size() < min_count) {
    raise(ErrorCode::InsufficientScales, std::string("need at least ") +
                                             std::to_string(min_count) + " " + what);
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !std::isfinite(xs[k])) {
      raise(ErrorCode::InsufficientScales, std::string(what) + " must be positive");
    }
    if (k > 0 && !(xs[k] < xs[k - 1])) {
      raise(ErrorCode::InsufficientScales, std::string(what) + " must be strictly decreasing");
    }
  }
}

// log sum_i exp(q log p_i + beta log r_i) and its beta-derivative.
struct PhiValue {
  double log_sum;
  double slope;
};

PhiValue log_phi(std::span<const double> log_p, std::span<const double> log_r, double q,
                 double beta) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log_p.size(); ++i) mx = std::max(mx, q * log_p[i] + beta * log_r[i]);
  double s = 0.0, ds = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    const double w = std::exp(q * log_p[i] + beta * log_r[i] - mx);
    s += w;
    ds += w * log_r[i];
  }
  return {mx + std::log(s), ds / s};
}

// Gap data grouped into cutoff bands for the interval-slope estimator.
struct BandedGaps {
  std::vector<GapLogs> logs;        // gaps in id order
  std::vector<std::size_t> band;    // band index per gap, or npos
  std::size_t band_count = 0;
  std::vector<double> abscissae;    // -log delta_{k+1}
};

constexpr std::size_t kNoBand = std::numeric_limits<std::size_t>::max();

BandedGaps band_gaps(const SelfSimilarMeasure& mu, double a, std::span<const double> deltas,
                     const EnumerationLimits& limits) {
  BandedGaps out;
  const std::vector<GapInterval> gaps = enumerate_gaps(mu.system(), deltas.back(), limits);
  out.logs = gap_logs(mu, gaps, a, limits.threads);
  out.band.assign(gaps.size(), kNoBand);
  out.band_count = deltas.size() - 1;
  std::size_t k = 0;
  // Gaps are sorted by decreasing length, so bands are contiguous runs.
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    const double len = gaps[n].length;
    if (reaches_cutoff(len, deltas[0])) continue;
    while (k + 1 < deltas.size() && !reaches_cutoff(len, deltas[k + 1])) ++k;
    if (k + 1 < deltas.size()) out.band[n] = k;
  }
  for (std::size_t j = 0; j + 1 < deltas.size(); ++j) out.abscissae.push_back(-std::log(deltas[j + 1]));
  return out;
}

struct SlopeAt {
  detail::LineFit fit;
  std::vector<double> x;
};

SlopeAt band_slope(const BandedGaps& g, double q, double beta) {
  std::vector<LogSumAccumulator> acc(g.band_count);
  for (std::size_t n = 0; n < g.logs.size(); ++n) {
    if (g.band[n] == kNoBand) continue;
    const double qm = q == 0.0 ? 0.0 : q * g.logs[n].log_measure;
    acc[g.band[n]].add(qm + beta * g.logs[n].log_length);
  }
  SlopeAt out;
  std::vector<double> y;
  for (std::size_t k = 0; k < g.band_count; ++k) {
    const LogValue v = acc[k].result();
    if (v.is_zero()) continue;
    out.x.push_back(g.abscissae[k]);
    y.push_back(v.log_magnitude);
  }
  if (out.x.size() < 3) {
    raise(ErrorCode::InsufficientScales, "fewer than 3 nonempty cutoff bands");
  }
  out.fit = detail::fit_line(out.x, y);
  return out;
}

BetaEstimate interval_estimate_from(const BandedGaps& g, double q) {
  double lo = kBetaLo, hi = kBetaHi;
  if (!(band_slope(g, q, lo).fit.slope > 0.0) || !(band_slope(g, q, hi).fit.slope < 0.0)) {
    raise(ErrorCode::Bracket, "growth exponent does not change sign on [-50, 50]");
  }
  while (hi - lo > kBracketWidth) {
    const double mid = 0.5 * (lo + hi);
    if (band_slope(g, q, mid).fit.slope > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  BetaEstimate est;
  est.q = q;
  est.method = BetaMethod::IntervalSlope;
  est.value = 0.5 * (lo + hi);
  est.bracket_width = hi - lo;
  const SlopeAt at = band_slope(g, q, est.value);
  est.abscissae = at.x;
  est.residuals = at.fit.residuals;
  est.standard_error = at.fit.slope_stderr;
  return est;
}

BetaEstimate grid_estimate_from(double q, std::span<const double> scales,
                                std::span<const std::vector<double>> measures) {
  std::vector<double> x, y;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const LogValue v = log_power_sum(measures[k], q);
    if (v.is_zero()) continue;
    x.push_back(-std::log(scales[k]));
    y.push_back(v.log_magnitude);
  }
  if (x.size() < 4) raise(ErrorCode::InsufficientScales, "fewer than 4 usable scales");
  const detail::LineFit fit = detail::fit_line(x, y);
  BetaEstimate est;
  est.q = q;
  est.method = BetaMethod::GridRegression;
  est.value = fit.slope;
  est.abscissae = std::move(x);
  est.residuals = fit.residuals;
  est.standard_error = fit.slope_stderr;
  return est;
}

// Iterative max segment tree over a fixed array.
class RangeMax {
 public:
  explicit RangeMax(const std::vector<double>& v) : n_(v.size()), tree_(2 * v.size(), 0.0) {
    std::copy(v.begin(), v.end(), tree_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t i = n_; i-- > 1;) tree_[i] = std::max(tree_[2 * i], tree_[2 * i + 1]);
  }
  // max over [lo, hi), 0 when empty
  double query(std::size_t lo, std::size_t hi) const {
    double best = 0.0;
    for (lo += n_, hi += n_; lo < hi; lo >>= 1, hi >>= 1) {
      if (lo & 1) best = std::max(best, tree_[lo++]);
      if (hi & 1) best = std::max(best, tree_[--hi]);
    }
    return best;
  }

 private:
  std::size_t n_;
  std::vector<double> tree_;
};

LogValue band_sum(const std::vector<GapInterval>& gaps, const std::vector<GapLogs>& logs,
                  double q, double lo, double hi) {
  // gaps sorted by decreasing length: [first with len <= hi, first with len < lo)
  const auto b = std::partition_point(gaps.begin(), gaps.end(),
                                      [hi](const GapInterval& g) { return g.length > hi; });
  const auto e = std::partition_point(b, gaps.end(),
                                      [lo](const GapInterval& g) { return g.length >= lo; });
  LogSumAccumulator acc;
  for (auto it = b; it != e; ++it) {
    const auto n = static_cast<std::size_t>(it - gaps.begin());
    acc.add(q == 0.0 ? 0.0 : q * logs[n].log_measure);
  }
  return acc.result();
}

double linear_power_sum(std::span<const double> xs, double q) {
  double s = 0.0;
  for (double x : xs) {
    if (x > 0.0) s += q == 0.0 ? 1.0 : std::pow(x, q);
  }
  return s;
}

}  // namespace

double beta_closed_form(std::span<const double> p, std::span<const double> r, double q) {
  if (p.size() != r.size() || p.empty()) {
    raise(ErrorCode::InvalidArgument, "weights and ratios must have equal, nonzero length");
  }
  if (q == 1.0) return 0.0;
  std::vector<double> log_p, log_r;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !(r[i] > 0.0 && r[i] < 1.0)) {
      raise(ErrorCode::InvalidArgument, "weights must be positive and ratios in (0,1)");
    }
    log_p.push_back(std::log(p[i]));
    log_r.push_back(std::log(r[i]));
  }
  // L(beta) = log sum p^q r^beta is strictly decreasing; expand to a bracket.
  double lo = -1.0, hi = 1.0;
  while (log_phi(log_p, log_r, q, lo).log_sum <= 0.0) lo *= 2.0;
  while (log_phi(log_p, log_r, q, hi).log_sum >= 0.0) hi *= 2.0;
  double beta = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const PhiValue v = log_phi(log_p, log_r, q, beta);
    if (v.log_sum == 0.0) return beta;
    if (v.log_sum > 0.0) {
      lo = beta;
    } else {
      hi = beta;
    }
    double next = beta - v.log_sum / v.slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - beta) <= 1e-15 * std::max(1.0, std::abs(beta)) || hi - lo <= 1e-14) {
      return next;
    }
    beta = next;
  }
  raise(ErrorCode::NonConverged, "closed-form root did not converge");
}

double beta_closed_form(const SelfSimilarMeasure& mu, double q) {
  std::vector<double> r;
  for (const Similarity& f : mu.system().maps()) r.push_back(f.ratio);
  return beta_closed_form(mu.weights(), r, q);
}

std::vector<BetaEstimate> beta_grid_scan(const SelfSimilarMeasure& mu, std::span<const double> qs,
                                         double b, std::span<const double> scales,
                                         unsigned threads) {
  require_decreasing(scales, 4, "grid scales");
  if (scales.front() > 1.0) raise(ErrorCode::InvalidArgument, "grid scales must be <= 1");
  for (double q : qs) {
    if (q < 0.0 && b == 0.0) {
      raise(ErrorCode::NegativeQUnenlarged, "negative q requires a positive enlargement");
    }
  }
  std::vector<std::vector<double>> measures(scales.size());
  detail::parallel_for_index(scales.size(), threads, [&](std::size_t k) {
    const std::vector<GridCell> cells = grid_cells_star(mu, scales[k]);
    measures[k] = enlarged_cell_measures(mu, cells, b);
  });
  std::vector<BetaEstimate> out(qs.size());
  detail::parallel_for_index(qs.size(), threads, [&](std::size_t j) {
    out[j] = grid_estimate_from(qs[j], scales, measures);
  });
  return out;
}

BetaEstimate beta_grid_estimate(const SelfSimilarMeasure& mu, double q, double b,
                                std::span<const double> scales, unsigned threads) {
  const double qs[] = {q};
  return beta_grid_scan(mu, qs, b, scales, threads).front();
}

std::vector<BetaEstimate> beta_interval_scan(const SelfSimilarMeasure& mu,
                                             std::span<const double> qs, double a,
                                             std::span<const double> deltas,
                                             const EnumerationLimits& limits) {
  if (!(a > 0.0)) raise(ErrorCode::InvalidArgument, "interval estimates need a > 0");
  require_decreasing(deltas, 4, "cutoffs");
  const BandedGaps g = band_gaps(mu, a, deltas, limits);
  std::vector<BetaEstimate> out(qs.size());
  detail::parallel_for_index(qs.size(), limits.threads,
                             [&](std::size_t j) { out[j] = interval_estimate_from(g, qs[j]); });
  return out;
}

BetaEstimate beta_interval_estimate(const SelfSimilarMeasure& mu, double q, double a,
                                    std::span<const double> deltas,
                                    const EnumerationLimits& limits) {
  const double qs[] = {q};
  return beta_interval_scan(mu, qs, a, deltas, limits).front();
}

std::vector<double> default_interval_cutoffs(const IfsSystem& ifs, double smallest) {
  std::vector<double> out;
  for (double d = 1.5 * ifs.max_gap(); d >= smallest; d /= 3.0) out.push_back(d);
  return out;
}

LegendreResult legendre_spectrum(std::span<const double> qs, std::span<const double> betas) {
  if (qs.size() != betas.size()) raise(ErrorCode::InvalidArgument, "q and beta sizes differ");
  if (qs.size() < 5) raise(ErrorCode::InvalidArgument, "need at least 5 q samples");
  for (std::size_t j = 1; j < qs.size(); ++j) {
    if (!(qs[j] > qs[j - 1])) raise(ErrorCode::InvalidArgument, "q samples must increase");
  }
  if (!(qs.front() < 0.0 && qs.back() > 0.0)) {
    raise(ErrorCode::InvalidArgument, "q samples must span negative and positive values");
  }
  LegendreResult out;
  for (std::size_t j = 1; j + 1 < qs.size(); ++j) {
    const double left = (betas[j] - betas[j - 1]) / (qs[j] - qs[j - 1]);
    const double right = (betas[j + 1] - betas[j]) / (qs[j + 1] - qs[j]);
    const double second = right - left;
    if (second < out.worst_second_difference) out.worst_second_difference = second;
  }
  out.convex = out.worst_second_difference >= -1e-9;
  for (std::size_t j = 1; j + 1 < qs.size(); ++j) {
    const double alpha = -(betas[j + 1] - betas[j - 1]) / (qs[j + 1] - qs[j - 1]);
    double f = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < qs.size(); ++k) f = std::min(f, betas[k] + qs[k] * alpha);
    if (!out.points.empty()) {
      const SpectrumPoint& prev = out.points.back();
      if (std::abs(prev.alpha - alpha) <= 1e-12 && std::abs(prev.f - f) <= 1e-12) continue;
    }
    out.points.push_back(SpectrumPoint{qs[j], alpha, f});
  }
  return out;
}

double lacunarity_estimate(const IfsSystem& ifs, int depth) {
  if (depth < 3) raise(ErrorCode::InvalidArgument, "sample depth must be at least 3");
  const double r_min = ifs.min_ratio();
  const double smallest_radius = std::pow(r_min, depth);
  // Any ball of radius r around a point of F holds a cell of length at least
  // r * r_min and hence that cell's shortest top gap.
  const double cutoff = smallest_radius * r_min * ifs.min_gap();
  std::vector<GapInterval> gaps = enumerate_gap_extents(ifs, cutoff);
  std::sort(gaps.begin(), gaps.end(),
            [](const GapInterval& a, const GapInterval& b) { return a.left < b.left; });
  std::vector<double> lefts, rights, lengths;
  for (const GapInterval& g : gaps) {
    lefts.push_back(g.left);
    rights.push_back(g.right);
    lengths.push_back(g.length);
  }
  const RangeMax tree(lengths);

  std::vector<double> points;
  auto expand = [&](const detail::Node& node) {
    if (static_cast<int>(node.word.size()) < depth) return true;
    points.push_back(node.translation);
    points.push_back(node.translation + node.ratio);
    return false;
  };
  auto on_gap = [](const detail::Node&, std::size_t) {};
  detail::traverse(ifs, {}, expand, on_gap);

  double lambda = 1.0;
  for (double r = 1.0; r >= smallest_radius; r *= 0.5) {
    for (double x : points) {
      const auto lo = static_cast<std::size_t>(
          std::lower_bound(lefts.begin(), lefts.end(), x - r) - lefts.begin());
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(rights.begin(), rights.end(), x + r) - rights.begin());
      const double longest = lo < hi ? tree.query(lo, hi) : 0.0;
      lambda = std::min(lambda, longest / r);
    }
  }
  return lambda;
}

double auto_enlargement(double lambda) {
  if (!(lambda > 0.0)) raise(ErrorCode::InvalidArgument, "lacunarity estimate must be positive");
  return std::max(6.0, std::ceil(2.0 / lambda));
}

SandwichReport sandwich_check(const SelfSimilarMeasure& mu, double q, double a, double b,
                              std::span<const double> scales, double lambda, double bound,
                              const EnumerationLimits& limits) {
  if (!(b > 0.0)) raise(ErrorCode::InvalidArgument, "sandwich check needs b > 0");
  if (!(a > 0.0)) raise(ErrorCode::InvalidArgument, "sandwich check needs a > 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) raise(ErrorCode::InvalidArgument, "lambda must be in (0,1]");
  if (scales.empty()) raise(ErrorCode::InsufficientScales, "no scales given");
  SandwichReport rep;
  rep.q = q;
  rep.a = a;
  rep.b = b;
  rep.lambda = lambda;
  rep.precondition = a >= 2.0 / lambda;
  if (q >= 0.0) {
    rep.eta1 = b / (2.0 + a);
    rep.eta2 = (2.0 + b) / (2.0 + a - 2.0 / lambda);
  } else {
    rep.eta1 = (2.0 + b) / (lambda * a);
    rep.eta2 = b / (2.0 + a);
  }
  const bool eta2_valid = rep.eta2 > 0.0 && std::isfinite(rep.eta2);
  const double r_min = *std::min_element(scales.begin(), scales.end());
  double cutoff = lambda * rep.eta1 * r_min;
  if (eta2_valid) cutoff = std::min(cutoff, lambda * rep.eta2 * r_min);
  const std::vector<GapInterval> gaps = enumerate_gaps(mu.system(), cutoff, limits);
  const std::vector<GapLogs> logs = gap_logs(mu, gaps, a, limits.threads);

  rep.scales.resize(scales.size());
  detail::parallel_for_index(scales.size(), limits.threads, [&](std::size_t k) {
    SandwichScale& s = rep.scales[k];
    s.r = scales[k];
    const std::vector<GridCell> cells = grid_cells_star(mu, s.r);
    s.grid = log_power_sum(enlarged_cell_measures(mu, cells, b), q);
    s.lower = band_sum(gaps, logs, q, lambda * rep.eta1 * s.r, rep.eta1 * s.r);
    s.grid_over_lower = std::exp(s.grid.log_magnitude - s.lower.log_magnitude);
    if (eta2_valid) {
      s.upper = band_sum(gaps, logs, q, lambda * rep.eta2 * s.r, rep.eta2 * s.r);
      s.grid_over_upper = std::exp(s.grid.log_magnitude - s.upper.log_magnitude);
    } else {
      s.grid_over_upper = std::numeric_limits<double>::infinity();
    }
  });
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.c2 = 0.0;
  rep.bounded = true;
  for (const SandwichScale& s : rep.scales) {
    rep.c1 = std::min(rep.c1, s.grid_over_lower);
    rep.c2 = std::max(rep.c2, s.grid_over_upper);
    for (double ratio : {s.grid_over_lower, s.grid_over_upper}) {
      if (!(std::isfinite(ratio) && ratio >= 1.0 / bound && ratio <= bound)) rep.bounded = false;
    }
  }
  return rep;
}

InclusionReport inclusion_check(const SelfSimilarMeasure& mu, double q, double a, double b,
                                std::span<const double> scales, unsigned threads) {
  if (!(a >= 0.0 && b >= a)) raise(ErrorCode::InvalidArgument, "need 0 <= a <= b");
  if (q < 0.0 && a == 0.0) {
    raise(ErrorCode::NegativeQUnenlarged, "negative q requires a positive enlargement");
  }
  InclusionReport rep;
  rep.q = q;
  rep.a = a;
  rep.b = b;
  rep.scales.resize(scales.size());
  detail::parallel_for_index(scales.size(), threads, [&](std::size_t k) {
    InclusionScale& s = rep.scales[k];
    s.r = scales[k];
    const std::vector<GridCell> cells = grid_cells_star(mu, s.r);
    const NestedMeasures m = nested_cell_measures(mu, cells, a, b);
    s.sum_a = linear_power_sum(m.inner, q);
    s.sum_b = linear_power_sum(m.outer, q);
    if (q >= 0.0) {
      s.ordered = s.sum_b >= s.sum_a;
      s.ratio = s.sum_a / s.sum_b;
    } else {
      s.ordered = s.sum_b <= s.sum_a;
      const double fine = s.r * a / (2.0 + b);
      const std::vector<GridCell> fine_cells = grid_cells_star(mu, fine);
      s.ratio = s.sum_a / linear_power_sum(enlarged_cell_measures(mu, fine_cells, b), q);
    }
  });
  rep.all_ordered = true;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  for (const InclusionScale& s : rep.scales) {
    rep.all_ordered = rep.all_ordered && s.ordered;
    rep.min_ratio = std::min(rep.min_ratio, s.ratio);
    rep.max_ratio = std::max(rep.max_ratio, s.ratio);
  }
  return rep;
}

}  // namespace mfst
