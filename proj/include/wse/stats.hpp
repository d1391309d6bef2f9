// Small statistics helpers shared by tests, benchmarks and the CLI.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wse {

// Kolmogorov-Smirnov sup distance between the empirical CDF of a sorted
// sample and a reference CDF.
template <class Cdf>
double ks_distance(const std::vector<double>& sorted_values, Cdf cdf) {
  const std::size_t n = sorted_values.size();
  if (n == 0) throw std::invalid_argument("ks_distance: empty sample");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted_values[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& values) {
  MeanStderr out;
  out.n = values.size();
  if (out.n == 0) return out;
  double acc = 0.0;
  for (double v : values) acc += v;
  out.mean = acc / out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / (out.n - 1) / out.n);
  }
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: bad input");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace wse
