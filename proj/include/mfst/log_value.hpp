#pragma once

#include <cmath>
#include <limits>

namespace mfst {

// Nonnegative real stored as its natural log; zero is log = -inf.
struct LogValue {
  double log_magnitude = -std::numeric_limits<double>::infinity();

  static LogValue zero() noexcept { return {}; }
  static LogValue from_log(double log_magnitude) noexcept { return {log_magnitude}; }
  static LogValue from_linear(double x) noexcept {
    return x > 0.0 ? LogValue{std::log(x)} : LogValue{};
  }

  bool is_zero() const noexcept { return std::isinf(log_magnitude) && log_magnitude < 0.0; }
  int sign() const noexcept { return is_zero() ? 0 : 1; }
  double value() const noexcept { return std::exp(log_magnitude); }
};

// Streaming log-sum-exp. The result depends on the order of add() calls, so
// callers feed terms in a fixed order.
class LogSumAccumulator {
 public:
  void add(double log_term) noexcept {
    if (std::isinf(log_term) && log_term < 0.0) return;
    if (scaled_ == 0.0) {
      max_ = log_term;
      scaled_ = 1.0;
    } else if (log_term <= max_) {
      scaled_ += std::exp(log_term - max_);
    } else {
      scaled_ = scaled_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  void add(LogValue v) noexcept { add(v.log_magnitude); }

  LogValue result() const noexcept {
    if (scaled_ == 0.0) return LogValue::zero();
    return LogValue::from_log(max_ + std::log(scaled_));
  }

 private:
  double max_ = 0.0;
  double scaled_ = 0.0;  // sum of exp(term - max_)
};

}  // namespace mfst
