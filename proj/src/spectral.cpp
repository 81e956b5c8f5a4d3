#include "mfst/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfst/detail/parallel.hpp"
#include "mfst/detail/regression.hpp"
#include "mfst/detail/traversal.hpp"
#include "mfst/errors.hpp"
#include "mfst/multifractal.hpp"

namespace mfst {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMinTraceValues = 100;
constexpr double kConsistentWidth = 0.05;
// Words of the suffix table that bounds subtree values.
constexpr std::size_t kSuffixTableLimit = 200'000;
// Log-domain slack on subtree bounds; it only ever widens the search.
constexpr double kPruneSlack = 1e-9;

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Per-gap values in the frame of the gap's own word: log(eps^beta rel^q)
// where rel is the measure of the (one- or two-sided) enlargement relative to
// p_w. Multiplying by w_u = p_u^q r_u^beta gives the singular value.
class LocalValues {
 public:
  LocalValues(const SelfSimilarMeasure& mu, double q, double beta, double a, GapWeighting mode)
      : mu_(mu), q_(q), beta_(beta), a_(a), mode_(mode) {}

  double log_w(double log_p, double log_r) const noexcept {
    return (q_ == 0.0 ? 0.0 : q_ * log_p) + (beta_ == 0.0 ? 0.0 : beta_ * log_r);
  }

  // {left, right}; -inf marks a suppressed or zero-measure side.
  std::array<double, 2> at(std::span<const Letter> word, std::size_t k,
                           std::size_t& zero_sides) const {
    const TopGap& e = mu_.system().gaps()[k];
    const double base = beta_ == 0.0 ? 0.0 : beta_ * std::log(e.length);
    const bool left = mode_ != GapWeighting::OneSidedRight;
    const bool right = mode_ != GapWeighting::OneSidedLeft;
    if (q_ == 0.0) return {left ? base : -kInf, right ? base : -kInf};
    const double half = 0.5 * a_ * e.length;
    double lo = e.left - half, hi = e.right + half;
    if (mode_ == GapWeighting::OneSidedLeft) hi = e.left;
    if (mode_ == GapWeighting::OneSidedRight) lo = e.right;
    const double rel = relative_measure(mu_, word, lo, hi);
    if (!(rel > 0.0)) {
      ++zero_sides;
      return {-kInf, -kInf};
    }
    const double v = base + q_ * std::log(rel);
    return {left ? v : -kInf, right ? v : -kInf};
  }

 private:
  const SelfSimilarMeasure& mu_;
  double q_, beta_, a_;
  GapWeighting mode_;
};

// log of the largest local value over all words. The enlargement of a gap
// overhangs its cell by at most h = a max_eps / 2, and after L parent levels
// with h r_max^L <= min_eps the overhang sits inside a gap, so the relative
// measure is a function of the last L letters. Returns +inf when the table
// of words up to length L would exceed the limit.
double log_local_bound(const SelfSimilarMeasure& mu, const LocalValues& local, double q,
                       double beta, double a) {
  const IfsSystem& ifs = mu.system();
  if (q == 0.0) {
    double best = -kInf;
    for (const TopGap& e : ifs.gaps()) best = std::max(best, beta * std::log(e.length));
    return best;
  }
  const double h = 0.5 * a * ifs.max_gap();
  int depth = 0;
  std::size_t words = 1, level = 1;
  for (double over = h; over > ifs.min_gap(); over *= ifs.max_ratio()) {
    ++depth;
    level *= ifs.size();
    words += level;
    if (words > kSuffixTableLimit) return kInf;
  }
  double best = -kInf;
  std::size_t ignored = 0;
  std::vector<Word> frontier{Word{}};
  for (int d = 0;; ++d) {
    for (const Word& w : frontier) {
      for (std::size_t k = 0; k + 1 < ifs.size(); ++k) {
        const auto v = local.at(w, k, ignored);
        best = std::max({best, v[0], v[1]});
      }
    }
    if (d == depth) break;
    std::vector<Word> next;
    next.reserve(frontier.size() * ifs.size());
    for (const Word& w : frontier) {
      for (std::size_t j = 0; j < ifs.size(); ++j) {
        Word c = w;
        c.push_back(static_cast<Letter>(j));
        next.push_back(std::move(c));
      }
    }
    frontier = std::move(next);
  }
  return best;
}

struct Emitted {
  double left = 0.0;
  double right = 0.0;
  double length = 0.0;
  std::array<double, 2> log_sigma{};
};

struct Search {
  const IfsSystem& ifs;
  const LocalValues& local;
  SpectrumCutoff cutoff;
  double log_tau = 0.0;
  double log_bound = kInf;  // +inf when no subtree bound is available
  std::size_t capacity = 0;
};

class Collector {
 public:
  explicit Collector(const Search& s) : s_(s) {}

  bool expand(const detail::Node& n) {
    const double lw = s_.local.log_w(n.log_weight, n.log_ratio);
    if (s_.cutoff.kind == SpectrumCutoff::Kind::Magnitude) {
      return lw + s_.log_bound >= s_.log_tau - kPruneSlack;
    }
    if (reaches_cutoff(n.ratio * s_.ifs.max_gap(), s_.cutoff.value)) return true;
    max_excluded = std::max(max_excluded, lw + s_.log_bound);
    return false;
  }

  void on_gap(const detail::Node& n, std::size_t k) {
    const TopGap& e = s_.ifs.gaps()[k];
    const double length = n.ratio * e.length;
    const bool by_length = s_.cutoff.kind == SpectrumCutoff::Kind::Length;
    if (by_length && !reaches_cutoff(length, s_.cutoff.value)) {
      if (std::isfinite(s_.log_bound)) {
        const auto v = s_.local.at(n.word, k, ignored_);
        const double lw = s_.local.log_w(n.log_weight, n.log_ratio);
        max_excluded = std::max({max_excluded, lw + v[0], lw + v[1]});
      }
      return;
    }
    const auto v = s_.local.at(n.word, k, zero_sides);
    const double lw = s_.local.log_w(n.log_weight, n.log_ratio);
    const std::array<double, 2> sigma{lw + v[0], lw + v[1]};
    if (!by_length && std::max(sigma[0], sigma[1]) < s_.log_tau) return;
    if (out.size() >= s_.capacity) {
      raise(ErrorCode::Capacity, "singular value enumeration exceeds the capacity limit of " +
                                     std::to_string(s_.capacity) + " intervals");
    }
    out.push_back(Emitted{n.apply(e.left), n.apply(e.right), length, sigma});
  }

  std::vector<Emitted> out;
  double max_excluded = -kInf;
  std::size_t zero_sides = 0;

 private:
  const Search& s_;
  std::size_t ignored_ = 0;
};

struct NodeState {
  Word word;
  double ratio = 1.0, translation = 0.0, log_ratio = 0.0, log_weight = 0.0;
};

// Sequence of emitted gaps and subtree tasks, in left-to-right order.
struct Item {
  bool task = false;
  std::size_t index = 0;
};

void split(const SelfSimilarMeasure& mu, NodeState node, int depth, int split_depth,
           Collector& top, std::vector<NodeState>& tasks, std::vector<Item>& items) {
  if (depth == split_depth) {
    items.push_back(Item{true, tasks.size()});
    tasks.push_back(std::move(node));
    return;
  }
  const detail::Node here{node.word, node.ratio, node.translation, node.log_ratio,
                          node.log_weight};
  if (!top.expand(here)) return;
  const IfsSystem& ifs = mu.system();
  for (std::size_t j = 0; j < ifs.size(); ++j) {
    const Similarity& f = ifs.map(j);
    NodeState child = node;
    child.word.push_back(static_cast<Letter>(j));
    child.ratio = node.ratio * f.ratio;
    child.translation = node.translation + node.ratio * f.translation;
    child.log_ratio = node.log_ratio + ifs.log_ratio(j);
    child.log_weight = node.log_weight + mu.log_weight(j);
    split(mu, std::move(child), depth + 1, split_depth, top, tasks, items);
    if (j + 1 < ifs.size()) {
      items.push_back(Item{false, top.out.size()});
      const std::size_t before = top.out.size();
      top.on_gap(here, j);
      if (top.out.size() == before) items.pop_back();
    }
  }
}

int split_depth_for(std::size_t m, unsigned threads) {
  if (threads <= 1) return 0;
  int d = 0;
  for (std::size_t tasks = 1; tasks < 16 * static_cast<std::size_t>(threads) && d < 12;
       tasks *= m) {
    ++d;
  }
  return d;
}

double max_log_w(const SelfSimilarMeasure& mu, const LocalValues& local) {
  double best = -kInf;
  for (std::size_t i = 0; i < mu.system().size(); ++i) {
    best = std::max(best, local.log_w(mu.log_weight(i), mu.system().log_ratio(i)));
  }
  return best;
}

// A gap I_n = psi_w(E_k) with a nonzero rescaling defect: sigma is its own
// value and scaled = p_i^q r_i^beta times the value of psi_i^{-1}(I_n). Top
// gaps have no preimage and scaled = -inf.
struct DefectTerm {
  double log_sigma = 0.0;
  double log_scaled = -kInf;
  bool top = false;
};

struct Defects {
  std::vector<DefectTerm> terms;
  double first = 0.0;
  double second = 0.0;
  std::size_t examined = 0;
};

Defects defect_terms(const SelfSimilarMeasure& mu, double q, double beta, double a,
                     const EnumerationLimits& limits) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    raise(ErrorCode::InvalidArgument, "enlargement must be positive and finite");
  }
  const IfsSystem& ifs = mu.system();
  const double termwise_zero = ifs.min_gap() / a;
  const double guard = termwise_zero * ifs.min_ratio();
  std::vector<GapInterval> gaps;
  try {
    gaps = enumerate_gaps(ifs, guard, limits);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::Capacity) throw;
    raise(ErrorCode::NonConverged, "rescaling defects not exhausted within the capacity limit");
  }
  const LocalValues local(mu, q, beta, a, GapWeighting::Symmetric);
  Defects out;
  out.examined = gaps.size();
  CompensatedSum first, second;
  std::size_t ignored = 0;
  for (const GapInterval& g : gaps) {
    const double lw = local.log_w(mu.log_word_weight(g.word), std::log(word_ratio(ifs, g.word)));
    if (g.word.empty()) {
      const double s = local.at(g.word, g.gap_index, ignored)[0];
      out.terms.push_back(DefectTerm{s, -kInf, true});
      second.add(std::exp(s));
      continue;
    }
    if (q == 0.0) continue;
    const std::span<const Letter> tail = std::span<const Letter>(g.word).subspan(1);
    const double own = local.at(g.word, g.gap_index, ignored)[0];
    const double pre = local.at(tail, g.gap_index, ignored)[0];
    if (own == pre) continue;
    if (!reaches_cutoff(g.length, termwise_zero)) {
      raise(ErrorCode::NonConverged,
            "nonzero rescaling defect below a|I_n| = min gap; the enlargement is too large");
    }
    const DefectTerm t{lw + own, lw + pre, false};
    out.terms.push_back(t);
    first.add(std::exp(t.log_sigma) - std::exp(t.log_scaled));
  }
  out.first = first.value();
  out.second = second.value();
  return out;
}

double entropy_denominator(const SelfSimilarMeasure& mu, double q, double beta) {
  const LocalValues local(mu, q, beta, 1.0, GapWeighting::Symmetric);
  double h = 0.0;
  for (std::size_t i = 0; i < mu.system().size(); ++i) {
    const double lw = local.log_w(mu.log_weight(i), mu.system().log_ratio(i));
    h -= std::exp(lw) * lw;
  }
  return h;
}

}  // namespace

bool singular_value_order(const SingularValue& x, const SingularValue& y) noexcept {
  if (x.log_sigma != y.log_sigma) return x.log_sigma > y.log_sigma;
  if (x.gap_id != y.gap_id) return x.gap_id < y.gap_id;
  return x.tag < y.tag;
}

std::span<const SingularValue> SingularValueSet::complete_prefix() const {
  const double floor = log_complete_above;
  const auto end = std::partition_point(values.begin(), values.end(), [floor](const SingularValue& v) {
    return v.log_sigma >= floor && v.log_sigma > -kInf;
  });
  return {values.data(), static_cast<std::size_t>(end - values.begin())};
}

SingularValueSet singular_values(const SelfSimilarMeasure& mu, double q, double beta, double a,
                                 SpectrumCutoff cutoff, GapWeighting mode,
                                 const EnumerationLimits& limits) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    raise(ErrorCode::InvalidArgument, "enlargement must be positive and finite");
  }
  if (!(cutoff.value > 0.0) || !std::isfinite(cutoff.value)) {
    raise(ErrorCode::InvalidArgument, "cutoff must be positive and finite");
  }
  if (!std::isfinite(q) || !std::isfinite(beta)) {
    raise(ErrorCode::InvalidArgument, "q and beta must be finite");
  }
  const IfsSystem& ifs = mu.system();
  const LocalValues local(mu, q, beta, a, mode);
  const bool by_magnitude = cutoff.kind == SpectrumCutoff::Kind::Magnitude;
  // Subtree bounds need every map to shrink values: max_i p_i^q r_i^beta < 1.
  const bool shrinking = max_log_w(mu, local) < 0.0;
  if (by_magnitude && !shrinking) {
    raise(ErrorCode::InvalidArgument,
          "magnitude cutoff needs p_i^q r_i^beta < 1 for every map");
  }
  double log_bound = shrinking ? log_local_bound(mu, local, q, beta, a) : kInf;
  if (by_magnitude && !std::isfinite(log_bound)) {
    raise(ErrorCode::Capacity, "enlargement too large for the subtree bound table");
  }
  const Search search{ifs, local, cutoff, by_magnitude ? std::log(cutoff.value) : 0.0, log_bound,
                      limits.capacity};

  Collector top(search);
  std::vector<NodeState> tasks;
  std::vector<Item> items;
  split(mu, NodeState{}, 0, split_depth_for(ifs.size(), limits.threads), top, tasks, items);
  std::vector<Collector> parts(tasks.size(), Collector(search));
  detail::parallel_for_index(tasks.size(), limits.threads, [&](std::size_t t) {
    NodeState& s = tasks[t];
    Collector& c = parts[t];
    auto expand = [&c](const detail::Node& n) { return c.expand(n); };
    auto on_gap = [&c](const detail::Node& n, std::size_t k) { c.on_gap(n, k); };
    detail::traverse_from(ifs, mu.log_weights(), s.word, s.ratio, s.translation, s.log_ratio,
                          s.log_weight, expand, on_gap);
  });

  std::size_t total = top.out.size();
  double max_excluded = top.max_excluded;
  SingularValueSet set;
  set.zero_sides = top.zero_sides;
  for (const Collector& c : parts) {
    total += c.out.size();
    max_excluded = std::max(max_excluded, c.max_excluded);
    set.zero_sides += c.zero_sides;
  }
  if (total > limits.capacity) {
    raise(ErrorCode::Capacity, "singular value enumeration exceeds the capacity limit of " +
                                   std::to_string(limits.capacity) + " intervals");
  }
  std::vector<Emitted> all;
  all.reserve(total);
  for (const Item& it : items) {
    if (it.task) {
      auto& src = parts[it.index].out;
      std::move(src.begin(), src.end(), std::back_inserter(all));
      src.clear();
      src.shrink_to_fit();
    } else {
      all.push_back(top.out[it.index]);
    }
  }

  // Same id rule as enumerate_gaps: stable sort of the left-to-right order.
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&all](std::size_t x, std::size_t y) { return all[x].length > all[y].length; });
  set.gaps.resize(all.size());
  set.values.reserve(2 * all.size());
  for (std::size_t id = 0; id < order.size(); ++id) {
    const Emitted& e = all[order[id]];
    set.gaps[id] = Interval{e.left, e.right};
    set.values.push_back(SingularValue{e.log_sigma[0], id, EndpointTag::Left});
    set.values.push_back(SingularValue{e.log_sigma[1], id, EndpointTag::Right});
  }
  if (mode != GapWeighting::Symmetric) set.suppressed = all.size();
  std::sort(set.values.begin(), set.values.end(), singular_value_order);

  if (by_magnitude) {
    set.log_complete_above = search.log_tau;
  } else if (std::isfinite(log_bound)) {
    set.log_complete_above = std::nextafter(max_excluded, kInf);
  } else {
    set.log_complete_above = kInf;
  }
  return set;
}

TraceEstimate partial_sum_trace(std::span<const SingularValue> values) {
  std::size_t n = 0;
  for (; n < values.size(); ++n) {
    const double v = values[n].log_sigma;
    if (std::isnan(v) || v == kInf) {
      raise(ErrorCode::InvalidArgument, "singular values must be finite or zero");
    }
    if (v == -kInf) break;
    if (n > 0 && v > values[n - 1].log_sigma) {
      raise(ErrorCode::InvalidArgument, "singular values are not sorted in descending order");
    }
  }
  if (n < kMinTraceValues) {
    raise(ErrorCode::TooFewValues, "need at least 100 nonzero singular values, have " +
                                       std::to_string(n));
  }
  std::vector<std::size_t> checkpoints;
  for (int j = 0;; ++j) {
    const auto c = static_cast<std::size_t>(std::ceil(std::pow(1.5, j)));
    if (c >= n) break;
    if (c >= 2 && (checkpoints.empty() || checkpoints.back() != c)) checkpoints.push_back(c);
  }
  checkpoints.push_back(n);

  TraceEstimate est;
  const double shift = values[0].log_sigma;
  CompensatedSum sum;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sum.add(std::exp(values[k].log_sigma - shift));
    if (k + 1 == checkpoints[next]) {
      const double s = std::exp(shift + std::log(sum.value()));
      est.partial_ratios.push_back(TracePoint{k + 1, s / std::log(static_cast<double>(k + 1))});
      ++next;
    }
  }
  est.count = n;
  est.total = std::exp(shift + std::log(sum.value()));
  est.point = est.partial_ratios.back().ratio;
  est.band_lo = kInf;
  est.band_hi = -kInf;
  for (const TracePoint& p : est.partial_ratios) {
    if (10 * p.n < n) continue;
    est.band_lo = std::min(est.band_lo, p.ratio);
    est.band_hi = std::max(est.band_hi, p.ratio);
  }
  est.measurable_consistent = (est.band_hi - est.band_lo) < kConsistentWidth * est.point;
  return est;
}

DimensionEstimate spectral_dimension_estimate(const IfsSystem& ifs, std::span<const double> deltas,
                                              const EnumerationLimits& limits) {
  if (deltas.size() < 4) raise(ErrorCode::InsufficientScales, "need at least 4 cutoffs");
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 0.0) || !std::isfinite(deltas[k]) || (k > 0 && !(deltas[k] < deltas[k - 1]))) {
      raise(ErrorCode::InsufficientScales, "cutoffs must be positive and strictly decreasing");
    }
  }
  if (std::log10(deltas.front() / deltas.back()) < 3.0 - 1e-9) {
    raise(ErrorCode::InsufficientScales, "cutoffs must span at least 3 decades");
  }
  // Each cutoff moves up to the smallest gap length >= it, a corner of the
  // counting staircase. On lattice systems the corners lie on the power law
  // while arbitrary cutoffs sample the sawtooth at a varying phase.
  const std::vector<double> lengths = gap_lengths(ifs, deltas.back(), limits);
  DimensionEstimate out;
  std::vector<double> x, y;
  for (double d : deltas) {
    const auto n = static_cast<std::size_t>(
        std::partition_point(lengths.begin(), lengths.end(),
                             [d](double len) { return reaches_cutoff(len, d); }) -
        lengths.begin());
    if (n == 0) raise(ErrorCode::InsufficientScales, "a cutoff exceeds the largest gap");
    if (!out.counts.empty() && out.counts.back().count == n) continue;
    out.counts.push_back(GapCount{lengths[n - 1], n});
    x.push_back(-std::log(lengths[n - 1]));
    y.push_back(std::log(static_cast<double>(n)));
  }
  if (x.size() < 4) {
    raise(ErrorCode::InsufficientScales, "fewer than 4 distinct gap counts");
  }
  const detail::LineFit fit = detail::fit_line(x, y);
  out.value = fit.slope;
  out.standard_error = fit.slope_stderr;
  return out;
}

std::vector<MinkowskiPoint> minkowski_profile(const IfsSystem& ifs, std::span<const double> rs,
                                              double s, const EnumerationLimits& limits) {
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (!(rs[k] > 0.0) || !std::isfinite(rs[k]) || (k > 0 && !(rs[k] < rs[k - 1]))) {
      raise(ErrorCode::InvalidArgument, "radii must be positive and strictly decreasing");
    }
  }
  std::vector<MinkowskiPoint> out;
  if (rs.empty()) return out;
  const std::vector<double> lengths = gap_lengths(ifs, 2.0 * rs.back(), limits);
  for (double r : rs) {
    CompensatedSum removed;
    for (double len : lengths) {
      if (!(len > 2.0 * r)) break;
      removed.add(len - 2.0 * r);
    }
    const double length = 1.0 + 2.0 * r - removed.value();
    out.push_back(MinkowskiPoint{r, length, length / std::pow(r, 1.0 - s)});
  }
  return out;
}

RenewalConstants renewal_constants(const SelfSimilarMeasure& mu, double q, double a,
                                   const EnumerationLimits& limits) {
  RenewalConstants out;
  out.q = q;
  out.a = a;
  out.beta = beta_closed_form(mu, q);
  const Defects d = defect_terms(mu, q, out.beta, a, limits);
  out.first_term = d.first;
  out.second_term = d.second;
  out.r0 = d.first + d.second;
  out.gaps_examined = d.examined;
  out.entropy_denominator = entropy_denominator(mu, q, out.beta);
  out.c = 2.0 * out.r0 / out.entropy_denominator;
  return out;
}

double set_trace_constant(const IfsSystem& ifs) {
  std::vector<double> ones(ifs.size(), 1.0), ratios;
  for (const Similarity& f : ifs.maps()) ratios.push_back(f.ratio);
  const double s = beta_closed_form(ones, ratios, 0.0);
  double numerator = 0.0, denominator = 0.0;
  for (const TopGap& e : ifs.gaps()) numerator += std::pow(e.length, s);
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    denominator -= std::pow(ratios[i], s) * ifs.log_ratio(i);
  }
  return 2.0 * numerator / denominator;
}

RenewalReport renewal_diagnostic(const SelfSimilarMeasure& mu, double q, double beta, double a,
                                 std::span<const double> taus, const EnumerationLimits& limits) {
  if (taus.empty()) raise(ErrorCode::InvalidArgument, "need at least one threshold");
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (!(taus[k] > 0.0) || !std::isfinite(taus[k]) || (k > 0 && !(taus[k] < taus[k - 1]))) {
      raise(ErrorCode::InvalidArgument, "thresholds must be positive and strictly decreasing");
    }
  }
  RenewalReport rep;
  rep.q = q;
  rep.beta = beta;
  rep.a = a;
  const Defects d = defect_terms(mu, q, beta, a, limits);
  rep.r0 = d.first + d.second;
  rep.target = rep.r0 / entropy_denominator(mu, q, beta);
  rep.decades = std::log10(taus.front() / taus.back());

  const SingularValueSet set = singular_values(
      mu, q, beta, a, SpectrumCutoff::magnitude(taus.back()), GapWeighting::Symmetric, limits);
  const auto& v = set.values;
  CompensatedSum running;
  std::size_t idx = 0;
  double lo = kInf, hi = 0.0;
  for (double tau : taus) {
    const double log_tau = std::log(tau);
    while (idx < v.size() && v[idx].log_sigma >= log_tau) running.add(std::exp(v[idx++].log_sigma));
    RenewalPoint p;
    p.tau = tau;
    p.s = 0.5 * running.value();
    p.s_over_log = p.s / -log_tau;
    p.s1 = idx / 2;
    p.tau_s1 = tau * static_cast<double>(p.s1);
    CompensatedSum r;
    for (const DefectTerm& t : d.terms) {
      if (t.log_sigma >= log_tau) r.add(std::exp(t.log_sigma));
      if (t.log_scaled >= log_tau) r.add(-std::exp(t.log_scaled));
    }
    p.r = r.value();
    lo = std::min(lo, p.tau_s1);
    hi = std::max(hi, p.tau_s1);
    rep.points.push_back(p);
  }
  rep.tau_s1_spread = lo > 0.0 ? hi / lo : kInf;
  const double scale = std::max(std::abs(rep.r0), std::numeric_limits<double>::min());
  for (std::size_t k = rep.points.size(); k-- > 0;) {
    if (std::abs(rep.points[k].r - rep.r0) > 1e-12 * scale) break;
    rep.r_stable_from = k;
  }
  return rep;
}

}  // namespace mfst
