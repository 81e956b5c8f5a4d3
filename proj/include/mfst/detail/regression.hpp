#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace mfst::detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::vector<double> residuals;
};

// Ordinary least squares y = intercept + slope x. Needs at least 2 points;
// the standard error is 0 with exactly 2.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residuals.push_back(e);
    sse += e * e;
  }
  if (n > 2) fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  return fit;
}

}  // namespace mfst::detail
