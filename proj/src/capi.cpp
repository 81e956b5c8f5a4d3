#include "mfst/mfst.h"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <string_view>
#include <vector>

#include "mfst/errors.hpp"
#include "mfst/multifractal.hpp"
#include "mfst/nc_integral.hpp"
#include "mfst/spectral.hpp"

struct mfst_system {
  mfst::SelfSimilarMeasure mu;
};

struct mfst_values {
  mfst::SingularValueSet set;
};

struct mfst_function {
  mfst::TestFunction f;
};

namespace {

thread_local std::string last_error;

mfst_status to_status(mfst::ErrorCode code) {
  using mfst::ErrorCode;
  switch (code) {
    case ErrorCode::Overlap: return MFST_E_OVERLAP;
    case ErrorCode::Boundary: return MFST_E_BOUNDARY;
    case ErrorCode::Ratio: return MFST_E_RATIO;
    case ErrorCode::ZeroGap: return MFST_E_ZERO_GAP;
    case ErrorCode::Capacity: return MFST_E_CAPACITY;
    case ErrorCode::EmptyInterval: return MFST_E_EMPTY_INTERVAL;
    case ErrorCode::NegativeQUnenlarged: return MFST_E_NEGATIVE_Q_UNENLARGED;
    case ErrorCode::InsufficientScales: return MFST_E_INSUFFICIENT_SCALES;
    case ErrorCode::Bracket: return MFST_E_BRACKET;
    case ErrorCode::TooFewValues: return MFST_E_TOO_FEW_VALUES;
    case ErrorCode::NonConverged: return MFST_E_NON_CONVERGED;
    case ErrorCode::ZeroMeasureSide: return MFST_E_ZERO_MEASURE_SIDE;
    case ErrorCode::InvalidArgument: return MFST_E_INVALID_ARGUMENT;
  }
  return MFST_E_INTERNAL;
}

mfst_status fail(mfst_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs body and turns exceptions into a status. No exception crosses the C boundary.
template <class Body>
mfst_status guarded(Body&& body) noexcept {
  try {
    body();
    return MFST_OK;
  } catch (const mfst::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MFST_E_OUT_OF_MEMORY, "OutOfMemoryError: allocation failed");
  } catch (const std::exception& e) {
    return fail(MFST_E_INTERNAL, std::string("InternalError: ") + e.what());
  } catch (...) {
    return fail(MFST_E_INTERNAL, "InternalError: unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) mfst::raise(mfst::ErrorCode::InvalidArgument, what);
}

mfst::EnumerationLimits limits_of(const mfst_limits* l) {
  mfst::EnumerationLimits out;
  if (l != nullptr) {
    if (l->capacity > 0) out.capacity = l->capacity;
    out.threads = l->threads == 0 ? 1 : l->threads;
  }
  return out;
}

template <class T>
std::span<const T> view(const T* p, std::size_t n) {
  require(n == 0 || p != nullptr, "null array");
  return std::span<const T>(p, n);
}

mfst::SpectrumCutoff cutoff_of(mfst_cutoff_kind kind, double value) {
  require(std::isfinite(value) && value > 0.0, "cutoff must be positive and finite");
  if (kind == MFST_CUTOFF_LENGTH) return mfst::SpectrumCutoff::length(value);
  require(kind == MFST_CUTOFF_MAGNITUDE, "unknown cutoff kind");
  return mfst::SpectrumCutoff::magnitude(value);
}

mfst::GapWeighting weighting_of(mfst_weighting w) {
  switch (w) {
    case MFST_SYMMETRIC: return mfst::GapWeighting::Symmetric;
    case MFST_ONE_SIDED_LEFT: return mfst::GapWeighting::OneSidedLeft;
    case MFST_ONE_SIDED_RIGHT: return mfst::GapWeighting::OneSidedRight;
  }
  mfst::raise(mfst::ErrorCode::InvalidArgument, "unknown weighting");
}

void copy_trace(const mfst::TraceEstimate& t, mfst_trace* out) {
  out->point = t.point;
  out->band_lo = t.band_lo;
  out->band_hi = t.band_hi;
  out->total = t.total;
  out->count = t.count;
  out->measurable_consistent = t.measurable_consistent ? 1 : 0;
}

double parse_double(std::string_view key, std::string_view text) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(x)) {
    mfst::raise(mfst::ErrorCode::InvalidArgument,
                "parameter " + std::string(key) + " is not a finite number: " + std::string(text));
  }
  return x;
}

mfst::Word parse_word(std::string_view text) {
  mfst::Word w;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view part = text.substr(0, comma);
    unsigned value = 0;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || end != part.data() + part.size() || part.empty() ||
        value > std::numeric_limits<mfst::Letter>::max()) {
      mfst::raise(mfst::ErrorCode::InvalidArgument, "bad cell word: " + std::string(text));
    }
    w.push_back(static_cast<mfst::Letter>(value));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (text.empty()) mfst::raise(mfst::ErrorCode::InvalidArgument, "bad cell word");
  }
  return w;
}

}  // namespace

extern "C" {

const char* mfst_status_name(mfst_status status) {
  switch (status) {
    case MFST_OK: return "Ok";
    case MFST_E_OUT_OF_MEMORY: return "OutOfMemoryError";
    case MFST_E_INTERNAL: return "InternalError";
    default: break;
  }
  static const mfst::ErrorCode codes[] = {
      mfst::ErrorCode::Overlap,           mfst::ErrorCode::Boundary,
      mfst::ErrorCode::Ratio,             mfst::ErrorCode::ZeroGap,
      mfst::ErrorCode::Capacity,          mfst::ErrorCode::EmptyInterval,
      mfst::ErrorCode::NegativeQUnenlarged, mfst::ErrorCode::InsufficientScales,
      mfst::ErrorCode::Bracket,           mfst::ErrorCode::TooFewValues,
      mfst::ErrorCode::NonConverged,      mfst::ErrorCode::ZeroMeasureSide,
      mfst::ErrorCode::InvalidArgument};
  const int k = static_cast<int>(status) - 1;
  if (k < 0 || k >= static_cast<int>(std::size(codes))) return "UnknownError";
  // error_name returns views of string literals, so data() is terminated.
  return mfst::error_name(codes[k]).data();
}

const char* mfst_last_error(void) { return last_error.c_str(); }

mfst_status mfst_format_double(double x, char* buf, size_t cap) {
  return guarded([&] {
    require(buf != nullptr && cap >= 32, "format buffer needs 32 bytes");
    if (std::isnan(x)) {
      std::strcpy(buf, "nan");
      return;
    }
    if (std::isinf(x)) {
      std::strcpy(buf, x > 0 ? "inf" : "-inf");
      return;
    }
    if (x == 0.0) x = 0.0;  // drops the sign of -0
    const auto [end, ec] = std::to_chars(buf, buf + cap - 1, x, std::chars_format::general, 12);
    require(ec == std::errc{}, "format failed");
    *end = '\0';
  });
}

mfst_status mfst_system_create(const double* ratios, const double* translations,
                               const double* weights, size_t m, mfst_system** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = nullptr;
    require(ratios != nullptr && translations != nullptr, "null map arrays");
    std::vector<mfst::Similarity> maps;
    for (std::size_t i = 0; i < m; ++i) maps.push_back({ratios[i], translations[i]});
    mfst::IfsSystem ifs = mfst::IfsSystem::validate(maps);
    std::vector<double> p(m, 1.0 / static_cast<double>(m));
    if (weights != nullptr) p.assign(weights, weights + m);
    *out = new mfst_system{mfst::SelfSimilarMeasure::create(std::move(ifs), std::move(p))};
  });
}

void mfst_system_destroy(mfst_system* sys) { delete sys; }

size_t mfst_system_size(const mfst_system* sys) {
  return sys == nullptr ? 0 : sys->mu.system().size();
}

mfst_status mfst_system_map(const mfst_system* sys, size_t i, double* ratio, double* translation,
                            double* weight) {
  return guarded([&] {
    require(sys != nullptr && i < sys->mu.system().size(), "map index out of range");
    const auto& g = sys->mu.system().map(i);
    if (ratio) *ratio = g.ratio;
    if (translation) *translation = g.translation;
    if (weight) *weight = sys->mu.weight(i);
  });
}

mfst_status mfst_system_gap(const mfst_system* sys, size_t i, double* left, double* right) {
  return guarded([&] {
    require(sys != nullptr && i < sys->mu.system().gaps().size(), "gap index out of range");
    const auto& g = sys->mu.system().gaps()[i];
    if (left) *left = g.left;
    if (right) *right = g.right;
  });
}

mfst_status mfst_lacunarity(const mfst_system* sys, int depth, double* lambda) {
  return guarded([&] {
    require(sys != nullptr && lambda != nullptr, "null argument");
    *lambda = mfst::lacunarity_estimate(sys->mu.system(), depth);
  });
}

mfst_status mfst_auto_enlargement(double lambda, double* a) {
  return guarded([&] {
    require(a != nullptr, "null argument");
    *a = mfst::auto_enlargement(lambda);
  });
}

mfst_status mfst_beta_closed(const mfst_system* sys, double q, double* beta) {
  return guarded([&] {
    require(sys != nullptr && beta != nullptr, "null argument");
    *beta = mfst::beta_closed_form(sys->mu, q);
  });
}

mfst_status mfst_beta_grid_scan(const mfst_system* sys, const double* qs, size_t nq, double b,
                                const double* scales, size_t nscales, unsigned threads,
                                mfst_beta_estimate* out) {
  return guarded([&] {
    require(sys != nullptr && out != nullptr, "null argument");
    const auto est = mfst::beta_grid_scan(sys->mu, view(qs, nq), b, view(scales, nscales),
                                          threads == 0 ? 1 : threads);
    for (std::size_t i = 0; i < est.size(); ++i) {
      out[i] = {est[i].q, est[i].value, est[i].standard_error, est[i].bracket_width};
    }
  });
}

mfst_status mfst_beta_interval_scan(const mfst_system* sys, const double* qs, size_t nq, double a,
                                    const double* deltas, size_t ndeltas,
                                    const mfst_limits* limits, mfst_beta_estimate* out) {
  return guarded([&] {
    require(sys != nullptr && out != nullptr, "null argument");
    const auto est = mfst::beta_interval_scan(sys->mu, view(qs, nq), a, view(deltas, ndeltas),
                                              limits_of(limits));
    for (std::size_t i = 0; i < est.size(); ++i) {
      out[i] = {est[i].q, est[i].value, est[i].standard_error, est[i].bracket_width};
    }
  });
}

mfst_status mfst_default_interval_cutoffs(const mfst_system* sys, double smallest, double* out,
                                          size_t cap, size_t* n) {
  return guarded([&] {
    require(sys != nullptr && n != nullptr, "null argument");
    const auto d = mfst::default_interval_cutoffs(sys->mu.system(), smallest);
    *n = d.size();
    for (std::size_t i = 0; i < d.size() && i < cap; ++i) out[i] = d[i];
  });
}

mfst_status mfst_legendre(const double* qs, const double* betas, size_t n,
                          mfst_spectrum_point* out, size_t cap, size_t* count, int* convex) {
  return guarded([&] {
    require(count != nullptr, "null argument");
    const auto res = mfst::legendre_spectrum(view(qs, n), view(betas, n));
    *count = res.points.size();
    if (convex) *convex = res.convex ? 1 : 0;
    for (std::size_t i = 0; i < res.points.size() && i < cap; ++i) {
      out[i] = {res.points[i].q, res.points[i].alpha, res.points[i].f};
    }
  });
}

mfst_status mfst_sandwich_check(const mfst_system* sys, double q, double a, double b,
                                const double* scales, size_t n, double lambda, double bound,
                                const mfst_limits* limits, mfst_sandwich_summary* out) {
  return guarded([&] {
    require(sys != nullptr && out != nullptr, "null argument");
    const auto rep =
        mfst::sandwich_check(sys->mu, q, a, b, view(scales, n), lambda, bound, limits_of(limits));
    out->eta1 = rep.eta1;
    out->eta2 = rep.eta2;
    out->c1 = rep.c1;
    out->c2 = rep.c2;
    out->min_ratio = std::numeric_limits<double>::infinity();
    out->max_ratio = 0.0;
    for (const auto& s : rep.scales) {
      for (double r : {s.grid_over_lower, s.grid_over_upper}) {
        out->min_ratio = std::min(out->min_ratio, r);
        out->max_ratio = std::max(out->max_ratio, r);
      }
    }
    out->precondition = rep.precondition ? 1 : 0;
    out->bounded = rep.bounded ? 1 : 0;
  });
}

mfst_status mfst_inclusion_check(const mfst_system* sys, double q, double a, double b,
                                 const double* scales, size_t n, unsigned threads,
                                 mfst_inclusion_summary* out) {
  return guarded([&] {
    require(sys != nullptr && out != nullptr, "null argument");
    const auto rep =
        mfst::inclusion_check(sys->mu, q, a, b, view(scales, n), threads == 0 ? 1 : threads);
    out->all_ordered = rep.all_ordered ? 1 : 0;
    out->min_ratio = rep.min_ratio;
    out->max_ratio = rep.max_ratio;
  });
}

mfst_status mfst_singular_values(const mfst_system* sys, double q, double beta, double a,
                                 mfst_cutoff_kind kind, double cutoff, mfst_weighting weighting,
                                 const mfst_limits* limits, mfst_values** out) {
  return guarded([&] {
    require(sys != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto set = mfst::singular_values(sys->mu, q, beta, a, cutoff_of(kind, cutoff),
                                     weighting_of(weighting), limits_of(limits));
    *out = new mfst_values{std::move(set)};
  });
}

void mfst_values_destroy(mfst_values* v) { delete v; }

size_t mfst_values_size(const mfst_values* v) { return v == nullptr ? 0 : v->set.values.size(); }

size_t mfst_values_complete_size(const mfst_values* v) {
  return v == nullptr ? 0 : v->set.complete_prefix().size();
}

mfst_status mfst_values_at(const mfst_values* v, size_t k, double* log_sigma, size_t* gap_id,
                           int* tag) {
  return guarded([&] {
    require(v != nullptr && k < v->set.values.size(), "value index out of range");
    const auto& x = v->set.values[k];
    if (log_sigma) *log_sigma = x.log_sigma;
    if (gap_id) *gap_id = x.gap_id;
    if (tag) *tag = static_cast<int>(x.tag);
  });
}

mfst_status mfst_values_gap(const mfst_values* v, size_t gap_id, double* left, double* right) {
  return guarded([&] {
    require(v != nullptr && gap_id < v->set.gaps.size(), "gap id out of range");
    if (left) *left = v->set.gaps[gap_id].lo;
    if (right) *right = v->set.gaps[gap_id].hi;
  });
}

mfst_status mfst_values_trace(const mfst_values* v, mfst_trace* out) {
  return guarded([&] {
    require(v != nullptr && out != nullptr, "null argument");
    copy_trace(mfst::partial_sum_trace(v->set.complete_prefix()), out);
  });
}

mfst_status mfst_trace_of(const double* sigma, size_t n, mfst_trace* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    std::vector<mfst::SingularValue> values;
    values.reserve(n);
    for (double x : view(sigma, n)) {
      require(x >= 0.0, "singular values must be nonnegative");
      values.push_back({std::log(x), values.size(), mfst::EndpointTag::Left});
    }
    copy_trace(mfst::partial_sum_trace(values), out);
  });
}

mfst_status mfst_spectral_dimension(const mfst_system* sys, const double* deltas, size_t n,
                                    const mfst_limits* limits, double* value,
                                    double* standard_error) {
  return guarded([&] {
    require(sys != nullptr && value != nullptr, "null argument");
    const auto est =
        mfst::spectral_dimension_estimate(sys->mu.system(), view(deltas, n), limits_of(limits));
    *value = est.value;
    if (standard_error) *standard_error = est.standard_error;
  });
}

mfst_status mfst_minkowski_profile(const mfst_system* sys, const double* rs, size_t n, double s,
                                   double* lengths, double* normalized) {
  return guarded([&] {
    require(sys != nullptr, "null argument");
    const auto prof = mfst::minkowski_profile(sys->mu.system(), view(rs, n), s);
    for (std::size_t i = 0; i < prof.size(); ++i) {
      if (lengths) lengths[i] = prof[i].length;
      if (normalized) normalized[i] = prof[i].normalized;
    }
  });
}

mfst_status mfst_renewal_constants(const mfst_system* sys, double q, double a,
                                   const mfst_limits* limits, mfst_renewal* out) {
  return guarded([&] {
    require(sys != nullptr && out != nullptr, "null argument");
    const auto rc = mfst::renewal_constants(sys->mu, q, a, limits_of(limits));
    *out = {rc.q,  rc.beta, rc.a, rc.first_term, rc.second_term, rc.r0, rc.entropy_denominator,
            rc.c, rc.gaps_examined};
  });
}

mfst_status mfst_set_trace_constant(const mfst_system* sys, double* c) {
  return guarded([&] {
    require(sys != nullptr && c != nullptr, "null argument");
    *c = mfst::set_trace_constant(sys->mu.system());
  });
}

mfst_status mfst_renewal_diagnostic(const mfst_system* sys, double q, double beta, double a,
                                    const double* taus, size_t n, const mfst_limits* limits,
                                    mfst_renewal_point* points, mfst_renewal_summary* summary) {
  return guarded([&] {
    require(sys != nullptr, "null argument");
    const auto rep =
        mfst::renewal_diagnostic(sys->mu, q, beta, a, view(taus, n), limits_of(limits));
    if (points) {
      for (std::size_t i = 0; i < rep.points.size(); ++i) {
        const auto& p = rep.points[i];
        points[i] = {p.tau, p.s, p.s_over_log, p.s1, p.tau_s1, p.r};
      }
    }
    if (summary) {
      *summary = {rep.r0, rep.target, rep.r_stable_from, rep.tau_s1_spread, rep.decades};
    }
  });
}

mfst_status mfst_function_create(const mfst_system* sys, const char* name,
                                 const char* const* keys, const char* const* values,
                                 size_t nparams, mfst_function** out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    require(nparams == 0 || (keys != nullptr && values != nullptr), "null parameter arrays");
    std::vector<std::pair<std::string_view, std::string_view>> params;
    for (std::size_t i = 0; i < nparams; ++i) {
      require(keys[i] != nullptr && values[i] != nullptr, "null parameter");
      params.emplace_back(keys[i], values[i]);
    }
    std::vector<bool> used(params.size(), false);
    auto take = [&](std::string_view key) -> const std::string_view* {
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].first == key) {
          used[i] = true;
          return &params[i].second;
        }
      }
      return nullptr;
    };
    auto number = [&](std::string_view key, double fallback, bool needed) {
      const auto* v = take(key);
      if (v == nullptr) {
        if (needed) mfst::raise(mfst::ErrorCode::InvalidArgument, "missing parameter " + std::string(key));
        return fallback;
      }
      return parse_double(key, *v);
    };

    const std::string_view n(name);
    mfst::TestFunction f;
    if (n == "constant") {
      f = mfst::TestFunction::constant_function(number("value", 1.0, false));
    } else if (n == "identity") {
      f = mfst::TestFunction::identity();
    } else if (n == "indicator") {
      require(sys != nullptr, "indicator needs a system");
      const auto* w = take("word");
      require(w != nullptr, "missing parameter word");
      const double open = number("open", 0.0, false);
      require(open == 0.0 || open == 1.0, "open must be 0 or 1");
      f = mfst::TestFunction::cell_indicator(sys->mu.system(), parse_word(*w), open == 0.0);
    } else if (n == "hat") {
      f = mfst::TestFunction::hat(number("center", 0.0, true), number("half_width", 0.0, true));
    } else {
      mfst::raise(mfst::ErrorCode::InvalidArgument, "unknown function " + std::string(n));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!used[i]) {
        mfst::raise(mfst::ErrorCode::InvalidArgument,
                    "unknown parameter " + std::string(params[i].first) + " for " + std::string(n));
      }
    }
    *out = new mfst_function{std::move(f)};
  });
}

mfst_status mfst_function_from_callback(double (*fn)(double, void*), void* user, double lipschitz,
                                        double sup_norm, mfst_function** out) {
  return guarded([&] {
    require(fn != nullptr && out != nullptr, "null argument");
    require(lipschitz >= 0.0 && sup_norm >= 0.0 && std::isfinite(sup_norm),
            "bounds must be nonnegative, sup norm finite");
    mfst::TestFunction f;
    f.name = "callback";
    f.eval = [fn, user](double x) { return fn(x, user); };
    f.lipschitz = lipschitz;
    f.sup_norm = sup_norm;
    f.is_zero = sup_norm == 0.0;
    *out = new mfst_function{std::move(f)};
  });
}

void mfst_function_destroy(mfst_function* f) { delete f; }

mfst_status mfst_function_eval(const mfst_function* f, double x, double* y) {
  return guarded([&] {
    require(f != nullptr && y != nullptr, "null argument");
    *y = f->f.eval(x);
  });
}

mfst_status mfst_nu_weights(const mfst_system* sys, double q, double beta, double* weights,
                            int* normalized) {
  return guarded([&] {
    require(sys != nullptr && weights != nullptr, "null argument");
    const auto nu = mfst::nu_weights(sys->mu, q, beta);
    std::copy(nu.weights.begin(), nu.weights.end(), weights);
    if (normalized) *normalized = nu.normalized ? 1 : 0;
  });
}

mfst_status mfst_integrate_nu(const mfst_function* f, const mfst_system* sys, double q, int depth,
                              unsigned threads, double* value, double* error_bound) {
  return guarded([&] {
    require(f != nullptr && sys != nullptr && value != nullptr, "null argument");
    const auto nu = mfst::nu_weights(sys->mu, q, mfst::beta_closed_form(sys->mu, q));
    const auto r = mfst::integrate_nu(f->f, nu, depth, threads == 0 ? 1 : threads);
    *value = r.value;
    if (error_bound) *error_bound = r.error_bound;
  });
}

mfst_status mfst_weighted_trace(const mfst_function* f, const mfst_values* v,
                                mfst_weighted_trace_result* out) {
  return guarded([&] {
    require(f != nullptr && v != nullptr && out != nullptr, "null argument");
    const auto wt = mfst::weighted_trace(f->f, v->set);
    copy_trace(wt.positive, &out->positive);
    copy_trace(wt.negative, &out->negative);
    out->point = wt.point;
    out->band_lo = wt.band_lo;
    out->band_hi = wt.band_hi;
  });
}

mfst_status mfst_verify_integral(const mfst_function* f, const mfst_system* sys, double q,
                                 double a, mfst_cutoff_kind kind, double cutoff, int depth,
                                 const mfst_limits* limits, mfst_integral_report* out) {
  return guarded([&] {
    require(f != nullptr && sys != nullptr && out != nullptr, "null argument");
    const auto r = mfst::verify_integral(f->f, sys->mu, q, a, cutoff_of(kind, cutoff), depth,
                                         limits_of(limits));
    *out = {r.q,        r.beta,         r.c,   r.lhs_point,       r.lhs_band_lo, r.lhs_band_hi,
            r.integral, r.integral_error, r.rhs, r.rel_discrepancy, r.budget};
  });
}

}  // extern "C"
