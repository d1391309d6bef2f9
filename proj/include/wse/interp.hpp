// Monotonicity-preserving cubic interpolation (Fritsch-Carlson) with exact
// piecewise integrals; backs the cumulative distribution tables.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace wse {

class PchipInterpolant {
 public:
  PchipInterpolant() = default;

  PchipInterpolant(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("PchipInterpolant: need >= 2 matching nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i] < x_[i + 1]))
        throw std::invalid_argument("PchipInterpolant: abscissae must be strictly increasing");
    d_.resize(n);
    std::vector<double> h(n - 1), slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      slope[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = slope[0];
    } else {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (slope[i - 1] * slope[i] <= 0.0) {
          d_[i] = 0.0;
        } else {
          const double w1 = 2.0 * h[i] + h[i - 1];
          const double w2 = h[i] + 2.0 * h[i - 1];
          d_[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
        }
      }
      d_[0] = edge_slope(h[0], h[1], slope[0], slope[1]);
      d_[n - 1] = edge_slope(h[n - 2], h[n - 3], slope[n - 2], slope[n - 3]);
    }
    prefix_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
      prefix_[i + 1] = prefix_[i] + segment_integral(i);
  }

  double operator()(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y_[i] * (2 * t3 - 3 * t2 + 1) + h * d_[i] * (t3 - 2 * t2 + t) +
           y_[i + 1] * (-2 * t3 + 3 * t2) + h * d_[i + 1] * (t3 - t2);
  }

  // int_{x_0}^{x} of the interpolant; clamped to the node range.
  double integral_to(double x) const {
    if (x <= x_.front()) return 0.0;
    if (x >= x_.back()) return prefix_.back();
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double part =
        y_[i] * (0.5 * t4 - t3 + t) + h * d_[i] * (0.25 * t4 - 2.0 / 3.0 * t3 + 0.5 * t2) +
        y_[i + 1] * (-0.5 * t4 + t3) + h * d_[i + 1] * (0.25 * t4 - t3 / 3.0);
    return prefix_[i] + h * part;
  }

  double total_integral() const { return prefix_.back(); }
  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }

 private:
  static double edge_slope(double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0) return 0.0;
    if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
    return d;
  }

  double segment_integral(std::size_t i) const {
    const double h = x_[i + 1] - x_[i];
    return 0.5 * h * (y_[i] + y_[i + 1]) + h * h / 12.0 * (d_[i] - d_[i + 1]);
  }

  std::size_t locate(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
  }

  std::vector<double> x_, y_, d_, prefix_;
};

}  // namespace wse
