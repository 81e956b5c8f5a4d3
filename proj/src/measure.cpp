#include "mfst/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfst/detail/parallel.hpp"
#include "mfst/detail/traversal.hpp"
#include "mfst/errors.hpp"

namespace mfst {
namespace {

// Partial cells lighter than this fraction of the mass found so far are dropped.
constexpr double kRelativeTol = 1e-15;
constexpr double kWeightFloor = 1e-300;
// Grid-line slack in units of r when deciding which cells a net cell touches.
constexpr double kGridSlack = 1e-9;
// Points computed along different word paths that agree to this many ulps are
// taken to coincide. Without it an aligned endpoint leaves an edge chain of
// cells that is split by roundoff, and the measure of that chain decays only
// like p^k while its length decays like r^k.
constexpr double kCoincide = 16.0 * std::numeric_limits<double>::epsilon();
constexpr std::size_t kChunk = 1024;

int depth_cap(const IfsSystem& ifs, double tol) {
  const double levels = std::ceil(std::log(1.0 / tol) / std::log(1.0 / ifs.max_ratio()));
  return 64 * std::max(1, static_cast<int>(levels));
}

struct Cell {
  double ratio;
  double translation;
  double weight;
};

// mu([lo,hi] ∩ [0,1]) to relative precision by a level-by-level frontier. At
// most two cells per level straddle an endpoint, so the frontier stays small.
double descend(const SelfSimilarMeasure& mu, double lo, double hi) {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (!(hi > lo)) return 0.0;
  if (lo <= 0.0 && hi >= 1.0) return 1.0;
  const IfsSystem& ifs = mu.system();
  const std::size_t m = ifs.size();
  const int cap = depth_cap(ifs, kRelativeTol);
  const double eta_lo = kCoincide * std::abs(lo);
  const double eta_hi = kCoincide * std::abs(hi);
  double acc = 0.0;
  std::vector<Cell> frontier{{1.0, 0.0, 1.0}};
  std::vector<Cell> next;
  for (int depth = 0; depth < cap && !frontier.empty(); ++depth) {
    next.clear();
    for (const Cell& c : frontier) {
      for (std::size_t j = 0; j < m; ++j) {
        const Similarity& f = ifs.map(j);
        const Cell child{c.ratio * f.ratio, c.translation + c.ratio * f.translation,
                         c.weight * mu.weight(j)};
        const double clo = child.translation;
        const double chi = child.translation + child.ratio;
        if (chi <= lo + eta_lo || clo >= hi - eta_hi) continue;
        if (clo >= lo - eta_lo && chi <= hi + eta_hi) {
          acc += child.weight;
          continue;
        }
        if (child.weight < kWeightFloor || child.weight < kRelativeTol * acc) continue;
        next.push_back(child);
      }
    }
    std::swap(frontier, next);
  }
  return acc;
}

std::vector<GridCell> cells_star(const IfsSystem& ifs, double r) {
  std::vector<std::int64_t> indices;
  const auto last = static_cast<std::int64_t>(std::ceil(1.0 / r - kGridSlack)) - 1;
  auto expand = [&](const detail::Node& node) {
    if (node.ratio >= r) return true;
    const double c0 = node.translation / r;
    const double c1 = (node.translation + node.ratio) / r;
    auto lo = static_cast<std::int64_t>(std::floor(c0 + kGridSlack));
    auto hi = static_cast<std::int64_t>(std::ceil(c1 - kGridSlack)) - 1;
    lo = std::max<std::int64_t>(lo, 0);
    hi = std::min(hi, last);
    for (std::int64_t k = lo; k <= hi; ++k) indices.push_back(k);
    return false;
  };
  auto on_gap = [](const detail::Node&, std::size_t) {};
  detail::traverse(ifs, {}, expand, on_gap);
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  std::vector<GridCell> cells;
  cells.reserve(indices.size());
  for (std::int64_t k : indices) cells.push_back(GridCell{r, k});
  return cells;
}

template <class Fn>
void chunked(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  detail::parallel_for_index(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) fn(i);
  });
}

double local_relative(const SelfSimilarMeasure& mu, std::span<const Letter> word, double lo,
                      double hi) {
  double value = descend(mu, lo, hi);
  if (word.empty()) return value;
  const Letter j = word.back();
  const Similarity& f = mu.system().map(j);
  const std::span<const Letter> parent = word.first(word.size() - 1);
  if (hi > 1.0) value += local_relative(mu, parent, f(1.0), f(hi)) / mu.weight(j);
  if (lo < 0.0) value += local_relative(mu, parent, f(lo), f(0.0)) / mu.weight(j);
  return value;
}

}  // namespace

SelfSimilarMeasure::SelfSimilarMeasure(IfsSystem system, std::vector<double> weights)
    : system_(std::move(system)), weights_(std::move(weights)) {
  for (double p : weights_) log_weights_.push_back(std::log(p));
  max_weight_ = *std::max_element(weights_.begin(), weights_.end());
}

SelfSimilarMeasure SelfSimilarMeasure::create(IfsSystem system, std::vector<double> weights) {
  if (weights.size() != system.size()) {
    raise(ErrorCode::InvalidArgument, "expected " + std::to_string(system.size()) +
                                          " weights, got " + std::to_string(weights.size()));
  }
  double total = 0.0;
  for (double p : weights) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      raise(ErrorCode::InvalidArgument, "weights must be strictly positive");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    raise(ErrorCode::InvalidArgument, "weights must sum to 1");
  }
  return SelfSimilarMeasure(std::move(system), std::move(weights));
}

double SelfSimilarMeasure::log_word_weight(std::span<const Letter> word) const {
  double s = 0.0;
  for (Letter j : word) s += log_weights_[j];
  return s;
}

EnlargedInterval enlarge(Interval iv, double a) { return EnlargedInterval{iv, a}; }

double cdf(const SelfSimilarMeasure& mu, double x, double tol) {
  if (!(tol > 0.0)) raise(ErrorCode::InvalidArgument, "cdf tolerance must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const IfsSystem& ifs = mu.system();
  const int cap = depth_cap(ifs, tol);
  const double eta = kCoincide * x;
  double acc = 0.0;
  double weight = 1.0;
  double ratio = 1.0;
  double translation = 0.0;
  for (int depth = 0; depth < cap; ++depth) {
    if (weight < tol) break;
    bool inside = false;
    for (std::size_t j = 0; j < ifs.size(); ++j) {
      const Similarity& f = ifs.map(j);
      const double lo = translation + ratio * f.translation;
      const double hi = lo + ratio * f.ratio;
      if (x >= hi - eta) {
        acc += weight * mu.weight(j);
        continue;
      }
      if (x <= lo + eta) return acc;  // x sits in a gap or on a left endpoint
      weight *= mu.weight(j);
      ratio *= f.ratio;
      translation = lo;
      inside = true;
      break;
    }
    if (!inside) return acc;
  }
  return acc + 0.5 * weight;
}

double interval_measure(const SelfSimilarMeasure& mu, Interval iv, double tol) {
  if (iv.hi < iv.lo) raise(ErrorCode::EmptyInterval, "right endpoint is left of left endpoint");
  const double v = cdf(mu, iv.hi, tol) - cdf(mu, iv.lo, tol);
  return std::clamp(v, 0.0, 1.0);
}

double relative_measure(const SelfSimilarMeasure& mu, std::span<const Letter> word, double lo,
                        double hi) {
  if (hi < lo) raise(ErrorCode::EmptyInterval, "right endpoint is left of left endpoint");
  return local_relative(mu, word, lo, hi);
}

double log_enlarged_gap_measure(const SelfSimilarMeasure& mu, std::span<const Letter> word,
                                std::size_t gap_index, double a) {
  const TopGap& e = mu.system().gaps()[gap_index];
  const double half = 0.5 * a * e.length;
  return mu.log_word_weight(word) + std::log(local_relative(mu, word, e.left - half,
                                                            e.right + half));
}

std::vector<GridCell> grid_cells_star(const SelfSimilarMeasure& mu, double r, double tol) {
  if (!(r > 0.0 && r <= 1.0)) raise(ErrorCode::InvalidArgument, "grid scale must lie in (0,1]");
  if (!(tol > 0.0)) raise(ErrorCode::InvalidArgument, "tolerance must be positive");
  return cells_star(mu.system(), r);
}

std::vector<double> enlarged_cell_measures(const SelfSimilarMeasure& mu,
                                           std::span<const GridCell> cells, double b,
                                           unsigned threads) {
  if (!(b >= 0.0)) raise(ErrorCode::InvalidArgument, "enlargement must be nonnegative");
  std::vector<double> out(cells.size());
  chunked(cells.size(), threads, [&](std::size_t i) {
    const Interval e = enlarge(cells[i].interval(), b).extent();
    out[i] = descend(mu, e.lo, e.hi);
  });
  return out;
}

NestedMeasures nested_cell_measures(const SelfSimilarMeasure& mu, std::span<const GridCell> cells,
                                    double a, double b, unsigned threads) {
  if (!(a >= 0.0 && b >= a)) raise(ErrorCode::InvalidArgument, "need 0 <= a <= b");
  NestedMeasures out{std::vector<double>(cells.size()), std::vector<double>(cells.size())};
  chunked(cells.size(), threads, [&](std::size_t i) {
    const Interval inner = enlarge(cells[i].interval(), a).extent();
    const Interval outer = enlarge(cells[i].interval(), b).extent();
    const double core = descend(mu, inner.lo, inner.hi);
    out.inner[i] = core;
    out.outer[i] = core + descend(mu, outer.lo, inner.lo) + descend(mu, inner.hi, outer.hi);
  });
  return out;
}

LogValue log_power_sum(std::span<const double> measures, double q) {
  LogSumAccumulator acc;
  for (double x : measures) {
    if (x > 0.0) acc.add(q == 0.0 ? 0.0 : q * std::log(x));
  }
  return acc.result();
}

LogValue grid_moment_sum(const SelfSimilarMeasure& mu, double r, double q, double b, double tol,
                         unsigned threads) {
  if (q < 0.0 && b == 0.0) {
    raise(ErrorCode::NegativeQUnenlarged, "negative q requires a positive enlargement");
  }
  const std::vector<GridCell> cells = grid_cells_star(mu, r, tol);
  return log_power_sum(enlarged_cell_measures(mu, cells, b, threads), q);
}

std::vector<GapLogs> gap_logs(const SelfSimilarMeasure& mu, std::span<const GapInterval> gaps,
                              double a, unsigned threads) {
  std::vector<GapLogs> out(gaps.size());
  chunked(gaps.size(), threads, [&](std::size_t i) {
    const GapInterval& g = gaps[i];
    out[i] = GapLogs{std::log(g.length), log_enlarged_gap_measure(mu, g.word, g.gap_index, a)};
  });
  return out;
}

LogValue interval_moment_sum(const SelfSimilarMeasure& mu, double delta, double q, double beta,
                             double a, double tol, const EnumerationLimits& limits) {
  if (!(a > 0.0)) raise(ErrorCode::InvalidArgument, "interval sums need a positive enlargement");
  if (!(tol > 0.0)) raise(ErrorCode::InvalidArgument, "tolerance must be positive");
  const std::vector<GapInterval> gaps = enumerate_gaps(mu.system(), delta, limits);
  const std::vector<GapLogs> logs = gap_logs(mu, gaps, a, limits.threads);
  LogSumAccumulator acc;
  for (const GapLogs& g : logs) {
    acc.add((q == 0.0 ? 0.0 : q * g.log_measure) + (beta == 0.0 ? 0.0 : beta * g.log_length));
  }
  return acc.result();
}

}  // namespace mfst
