#include "mfst/nc_integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfst/detail/parallel.hpp"
#include "mfst/errors.hpp"
#include "mfst/multifractal.hpp"

namespace mfst {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNormalizedTol = 1e-10;
// Quadrature tasks are the cells of this many leading letters, fixed so the
// summation order does not depend on the thread count.
constexpr std::size_t kTaskCells = 256;

struct CellSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) noexcept {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + comp; }
};

void sum_cells(const TestFunction& f, const AuxiliaryMeasure& nu, int depth, double ratio,
               double translation, double weight, CellSum& acc) {
  if (depth == 0) {
    acc.add(weight * f.eval(translation + 0.5 * ratio));
    return;
  }
  for (std::size_t j = 0; j < nu.system.size(); ++j) {
    const Similarity& g = nu.system.map(j);
    sum_cells(f, nu, depth - 1, ratio * g.ratio, translation + ratio * g.translation,
              weight * nu.weights[j], acc);
  }
}

TraceEstimate trace_part(std::vector<SingularValue>& values) {
  if (values.empty()) return TraceEstimate{};
  std::sort(values.begin(), values.end(), singular_value_order);
  return partial_sum_trace(values);
}

}  // namespace

AuxiliaryMeasure nu_weights(const SelfSimilarMeasure& mu, double q, double beta) {
  AuxiliaryMeasure nu{mu.system(), {}, false};
  double total = 0.0;
  for (std::size_t i = 0; i < mu.system().size(); ++i) {
    const double w = std::exp((q == 0.0 ? 0.0 : q * mu.log_weight(i)) +
                              (beta == 0.0 ? 0.0 : beta * mu.system().log_ratio(i)));
    nu.weights.push_back(w);
    total += w;
  }
  nu.normalized = std::abs(total - 1.0) <= kNormalizedTol;
  return nu;
}

TestFunction TestFunction::constant_function(double value) {
  TestFunction f;
  f.name = "constant";
  f.eval = [value](double) { return value; };
  f.lipschitz = 0.0;
  f.sup_norm = std::abs(value);
  f.is_zero = value == 0.0;
  f.is_constant = true;
  f.constant = value;
  return f;
}

TestFunction TestFunction::identity() {
  TestFunction f;
  f.name = "identity";
  f.eval = [](double x) { return x; };
  f.lipschitz = 1.0;
  f.sup_norm = 1.0;
  return f;
}

TestFunction TestFunction::cell_indicator(const IfsSystem& ifs, Word word, bool closed) {
  for (Letter j : word) {
    if (j >= ifs.size()) raise(ErrorCode::InvalidArgument, "cell word uses an unknown map");
  }
  const Interval cell = word_cell(ifs, word);
  TestFunction f;
  f.name = "indicator";
  if (closed) {
    f.eval = [cell](double x) { return x >= cell.lo && x <= cell.hi ? 1.0 : 0.0; };
  } else {
    f.eval = [cell](double x) { return x > cell.lo && x < cell.hi ? 1.0 : 0.0; };
  }
  f.lipschitz = kInf;
  f.sup_norm = 1.0;
  f.cell = std::move(word);
  f.is_cell_indicator = true;
  return f;
}

TestFunction TestFunction::hat(double center, double half_width) {
  if (!(half_width > 0.0) || !std::isfinite(half_width) || !std::isfinite(center)) {
    raise(ErrorCode::InvalidArgument, "hat needs a finite center and positive half width");
  }
  TestFunction f;
  f.name = "hat";
  f.eval = [center, half_width](double x) {
    return std::max(0.0, 1.0 - std::abs(x - center) / half_width);
  };
  f.lipschitz = 1.0 / half_width;
  f.sup_norm = 1.0;
  return f;
}

QuadratureResult integrate_nu(const TestFunction& f, const AuxiliaryMeasure& nu, int depth,
                              unsigned threads) {
  if (depth < 1) raise(ErrorCode::InvalidArgument, "quadrature depth must be at least 1");
  if (!nu.normalized) raise(ErrorCode::InvalidArgument, "nu weights do not sum to 1");
  if (f.is_constant) return QuadratureResult{f.constant, 0.0};

  const std::size_t m = nu.system.size();
  int lead = 0;
  for (std::size_t cells = 1; cells < kTaskCells && lead < depth; cells *= m) ++lead;
  std::size_t tasks = 1;
  for (int k = 0; k < lead; ++k) tasks *= m;
  std::vector<CellSum> parts(tasks);
  detail::parallel_for_index(tasks, threads, [&](std::size_t t) {
    double ratio = 1.0, translation = 0.0, weight = 1.0;
    // Task t is the word of `lead` letters whose base-m digits spell t.
    std::size_t rest = t, place = tasks;
    for (int k = 0; k < lead; ++k) {
      place /= m;
      const std::size_t j = rest / place;
      rest %= place;
      const Similarity& g = nu.system.map(j);
      translation += ratio * g.translation;
      ratio *= g.ratio;
      weight *= nu.weights[j];
    }
    sum_cells(f, nu, depth - lead, ratio, translation, weight, parts[t]);
  });
  CellSum total;
  for (const CellSum& p : parts) total.add(p.value());

  QuadratureResult out{total.value(), 0.0};
  const double diameter = std::pow(nu.system.max_ratio(), depth);
  if (f.is_cell_indicator && static_cast<std::size_t>(depth) >= f.cell.size()) {
    out.error_bound = 0.0;
  } else if (std::isfinite(f.lipschitz)) {
    out.error_bound = f.lipschitz * diameter;
  } else {
    out.error_bound = f.sup_norm;
  }
  return out;
}

WeightedTrace weighted_trace(const TestFunction& f, const SingularValueSet& set) {
  WeightedTrace out;
  if (f.is_zero || !(f.sup_norm > 0.0)) return out;
  const double floor = set.log_complete_above + std::log(f.sup_norm);
  std::vector<SingularValue> pos, neg;
  for (const SingularValue& v : set.values) {
    if (v.log_sigma == -kInf) continue;
    const Interval& g = set.gaps[v.gap_id];
    const double fx = f.eval(v.tag == EndpointTag::Left ? g.lo : g.hi);
    if (fx == 0.0) continue;
    const double w = v.log_sigma + std::log(std::abs(fx));
    if (w < floor) continue;
    (fx > 0.0 ? pos : neg).push_back(SingularValue{w, v.gap_id, v.tag});
  }
  out.positive = trace_part(pos);
  out.negative = trace_part(neg);
  out.point = out.positive.point - out.negative.point;
  out.band_lo = out.positive.band_lo - out.negative.band_hi;
  out.band_hi = out.positive.band_hi - out.negative.band_lo;
  return out;
}

WeightedTrace weighted_trace(const TestFunction& f, const SelfSimilarMeasure& mu, double q,
                             double a, SpectrumCutoff cutoff, const EnumerationLimits& limits) {
  const double beta = beta_closed_form(mu, q);
  return weighted_trace(f, singular_values(mu, q, beta, a, cutoff, GapWeighting::Symmetric,
                                           limits));
}

IntegralReport verify_integral(const TestFunction& f, const SelfSimilarMeasure& mu, double q,
                               double a, SpectrumCutoff cutoff, int depth,
                               const EnumerationLimits& limits) {
  IntegralReport rep;
  rep.q = q;
  rep.beta = beta_closed_form(mu, q);
  rep.c = renewal_constants(mu, q, a, limits).c;
  const QuadratureResult quad = integrate_nu(f, nu_weights(mu, q, rep.beta), depth,
                                             limits.threads);
  rep.integral = quad.value;
  rep.integral_error = quad.error_bound;
  rep.rhs = rep.c * quad.value;
  if (!f.is_zero) {
    const WeightedTrace wt = weighted_trace(
        f, singular_values(mu, q, rep.beta, a, cutoff, GapWeighting::Symmetric, limits));
    rep.lhs_point = wt.point;
    rep.lhs_band_lo = wt.band_lo;
    rep.lhs_band_hi = wt.band_hi;
  }
  const double scale = rep.rhs != 0.0 ? std::abs(rep.rhs) : 1.0;
  rep.rel_discrepancy = std::abs(rep.lhs_point - rep.rhs) / scale;
  rep.budget = ((rep.lhs_band_hi - rep.lhs_band_lo) + std::abs(rep.c) * quad.error_bound) / scale;
  return rep;
}

}  // namespace mfst
