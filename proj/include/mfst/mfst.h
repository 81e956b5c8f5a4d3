#ifndef MFST_H
#define MFST_H

#include <stddef.h>

#if defined(_WIN32)
#define MFST_API __declspec(dllexport)
#else
#define MFST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returns a status; on failure the message is kept per
   thread until the next failing call and read with mfst_last_error. */
typedef enum mfst_status {
  MFST_OK = 0,
  MFST_E_OVERLAP = 1,
  MFST_E_BOUNDARY = 2,
  MFST_E_RATIO = 3,
  MFST_E_ZERO_GAP = 4,
  MFST_E_CAPACITY = 5,
  MFST_E_EMPTY_INTERVAL = 6,
  MFST_E_NEGATIVE_Q_UNENLARGED = 7,
  MFST_E_INSUFFICIENT_SCALES = 8,
  MFST_E_BRACKET = 9,
  MFST_E_TOO_FEW_VALUES = 10,
  MFST_E_NON_CONVERGED = 11,
  MFST_E_ZERO_MEASURE_SIDE = 12,
  MFST_E_INVALID_ARGUMENT = 13,
  MFST_E_OUT_OF_MEMORY = 14,
  MFST_E_INTERNAL = 15
} mfst_status;

/* "OverlapError", ..., "OutOfMemoryError"; "Ok" for MFST_OK. */
MFST_API const char* mfst_status_name(mfst_status status);
MFST_API const char* mfst_last_error(void);

/* Shortest decimal with at most 12 significant digits, '.' separator, no
   "-0". Needs cap >= 32. */
MFST_API mfst_status mfst_format_double(double x, char* buf, size_t cap);

/* NULL means capacity 1e8 gaps, one thread. */
typedef struct mfst_limits {
  size_t capacity;
  unsigned threads;
} mfst_limits;

/* ---- systems ---------------------------------------------------------- */

/* A validated system psi_i(x) = ratios[i] x + translations[i] with weights
   p_i. weights may be NULL for the uniform measure. */
typedef struct mfst_system mfst_system;

MFST_API mfst_status mfst_system_create(const double* ratios, const double* translations,
                                        const double* weights, size_t m, mfst_system** out);
MFST_API void mfst_system_destroy(mfst_system* sys);

MFST_API size_t mfst_system_size(const mfst_system* sys);
MFST_API mfst_status mfst_system_map(const mfst_system* sys, size_t i, double* ratio,
                                     double* translation, double* weight);
/* Top gap i lies between maps i and i+1, i < m - 1. */
MFST_API mfst_status mfst_system_gap(const mfst_system* sys, size_t i, double* left,
                                     double* right);

MFST_API mfst_status mfst_lacunarity(const mfst_system* sys, int depth, double* lambda);
/* max(6, ceil(2 / lambda)) */
MFST_API mfst_status mfst_auto_enlargement(double lambda, double* a);

/* ---- beta(q) ---------------------------------------------------------- */

MFST_API mfst_status mfst_beta_closed(const mfst_system* sys, double q, double* beta);

typedef struct mfst_beta_estimate {
  double q;
  double value;
  double standard_error;
  double bracket_width; /* interval method only */
} mfst_beta_estimate;

/* out has room for nq entries. */
MFST_API mfst_status mfst_beta_grid_scan(const mfst_system* sys, const double* qs, size_t nq,
                                         double b, const double* scales, size_t nscales,
                                         unsigned threads, mfst_beta_estimate* out);
MFST_API mfst_status mfst_beta_interval_scan(const mfst_system* sys, const double* qs,
                                             size_t nq, double a, const double* deltas,
                                             size_t ndeltas, const mfst_limits* limits,
                                             mfst_beta_estimate* out);
/* Writes up to cap cutoffs and the full count to *n. */
MFST_API mfst_status mfst_default_interval_cutoffs(const mfst_system* sys, double smallest,
                                                   double* out, size_t cap, size_t* n);

typedef struct mfst_spectrum_point {
  double q;
  double alpha;
  double f;
} mfst_spectrum_point;

MFST_API mfst_status mfst_legendre(const double* qs, const double* betas, size_t n,
                                   mfst_spectrum_point* out, size_t cap, size_t* count,
                                   int* convex);

/* ---- sandwich and inclusion ------------------------------------------- */

typedef struct mfst_sandwich_summary {
  double eta1, eta2;
  double c1, c2;
  double min_ratio, max_ratio; /* over grid/lower and grid/upper */
  int precondition;
  int bounded;
} mfst_sandwich_summary;

MFST_API mfst_status mfst_sandwich_check(const mfst_system* sys, double q, double a, double b,
                                         const double* scales, size_t n, double lambda,
                                         double bound, const mfst_limits* limits,
                                         mfst_sandwich_summary* out);

typedef struct mfst_inclusion_summary {
  int all_ordered;
  double min_ratio, max_ratio;
} mfst_inclusion_summary;

MFST_API mfst_status mfst_inclusion_check(const mfst_system* sys, double q, double a, double b,
                                          const double* scales, size_t n, unsigned threads,
                                          mfst_inclusion_summary* out);

/* ---- spectrum of the Dirac operator ----------------------------------- */

typedef enum mfst_cutoff_kind { MFST_CUTOFF_LENGTH = 0, MFST_CUTOFF_MAGNITUDE = 1 } mfst_cutoff_kind;
typedef enum mfst_weighting {
  MFST_SYMMETRIC = 0,
  MFST_ONE_SIDED_LEFT = 1,
  MFST_ONE_SIDED_RIGHT = 2
} mfst_weighting;

/* Sorted singular values mu(I^a)^q |I|^beta with their gaps. */
typedef struct mfst_values mfst_values;

MFST_API mfst_status mfst_singular_values(const mfst_system* sys, double q, double beta,
                                          double a, mfst_cutoff_kind kind, double cutoff,
                                          mfst_weighting weighting, const mfst_limits* limits,
                                          mfst_values** out);
MFST_API void mfst_values_destroy(mfst_values* v);
MFST_API size_t mfst_values_size(const mfst_values* v);
/* Leading values certified to be the head of the full sorted sequence. */
MFST_API size_t mfst_values_complete_size(const mfst_values* v);
/* tag: 0 for the left endpoint, 1 for the right. */
MFST_API mfst_status mfst_values_at(const mfst_values* v, size_t k, double* log_sigma,
                                    size_t* gap_id, int* tag);
MFST_API mfst_status mfst_values_gap(const mfst_values* v, size_t gap_id, double* left,
                                     double* right);

typedef struct mfst_trace {
  double point; /* S_N / log N */
  double band_lo, band_hi;
  double total; /* S_N */
  size_t count; /* N */
  int measurable_consistent;
} mfst_trace;

MFST_API mfst_status mfst_values_trace(const mfst_values* v, mfst_trace* out);
/* sigma descending and nonnegative; the list ends at the first zero. */
MFST_API mfst_status mfst_trace_of(const double* sigma, size_t n, mfst_trace* out);

MFST_API mfst_status mfst_spectral_dimension(const mfst_system* sys, const double* deltas,
                                             size_t n, const mfst_limits* limits, double* value,
                                             double* standard_error);
/* lengths and normalized have room for n entries; rs decreasing. */
MFST_API mfst_status mfst_minkowski_profile(const mfst_system* sys, const double* rs, size_t n,
                                            double s, double* lengths, double* normalized);

typedef struct mfst_renewal {
  double q, beta, a;
  double first_term, second_term, r0;
  double entropy_denominator;
  double c; /* 2 r0 / entropy_denominator */
  size_t gaps_examined;
} mfst_renewal;

MFST_API mfst_status mfst_renewal_constants(const mfst_system* sys, double q, double a,
                                            const mfst_limits* limits, mfst_renewal* out);
MFST_API mfst_status mfst_set_trace_constant(const mfst_system* sys, double* c);

typedef struct mfst_renewal_point {
  double tau;
  double s;
  double s_over_log;
  size_t s1;
  double tau_s1;
  double r;
} mfst_renewal_point;

typedef struct mfst_renewal_summary {
  double r0;
  double target;
  size_t r_stable_from; /* (size_t)-1 when r never settles */
  double tau_s1_spread;
  double decades;
} mfst_renewal_summary;

/* taus strictly decreasing; points has room for n entries. */
MFST_API mfst_status mfst_renewal_diagnostic(const mfst_system* sys, double q, double beta,
                                             double a, const double* taus, size_t n,
                                             const mfst_limits* limits,
                                             mfst_renewal_point* points,
                                             mfst_renewal_summary* summary);

/* ---- noncommutative integral ------------------------------------------ */

typedef struct mfst_function mfst_function;

/* name: "constant" (value), "identity", "indicator" (word, open), "hat"
   (center, half_width). word is a comma-separated list of zero-based map
   indices; open = 1 drops the cell endpoints. Parameters are "key" / "value"
   strings. sys is needed for indicators only. */
MFST_API mfst_status mfst_function_create(const mfst_system* sys, const char* name,
                                          const char* const* keys, const char* const* values,
                                          size_t nparams, mfst_function** out);
/* f must be total on [0,1]; lipschitz may be INFINITY. */
MFST_API mfst_status mfst_function_from_callback(double (*f)(double x, void* user), void* user,
                                                 double lipschitz, double sup_norm,
                                                 mfst_function** out);
MFST_API void mfst_function_destroy(mfst_function* f);
MFST_API mfst_status mfst_function_eval(const mfst_function* f, double x, double* y);

MFST_API mfst_status mfst_nu_weights(const mfst_system* sys, double q, double beta,
                                     double* weights, int* normalized);
MFST_API mfst_status mfst_integrate_nu(const mfst_function* f, const mfst_system* sys, double q,
                                       int depth, unsigned threads, double* value,
                                       double* error_bound);

typedef struct mfst_weighted_trace_result {
  mfst_trace positive;
  mfst_trace negative;
  double point, band_lo, band_hi;
} mfst_weighted_trace_result;

MFST_API mfst_status mfst_weighted_trace(const mfst_function* f, const mfst_values* v,
                                         mfst_weighted_trace_result* out);

typedef struct mfst_integral_report {
  double q, beta, c;
  double lhs_point, lhs_band_lo, lhs_band_hi;
  double integral, integral_error;
  double rhs;
  double rel_discrepancy;
  double budget;
} mfst_integral_report;

MFST_API mfst_status mfst_verify_integral(const mfst_function* f, const mfst_system* sys,
                                          double q, double a, mfst_cutoff_kind kind,
                                          double cutoff, int depth, const mfst_limits* limits,
                                          mfst_integral_report* out);

#ifdef __cplusplus
}
#endif

#endif
