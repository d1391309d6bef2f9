// Bracketing 1-D root finding (Brent) used by the spectral solvers.

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

namespace wse {

// Root of f on [a, b] with f(a)*f(b) <= 0. Brent's method; returns the
// abscissa once the bracket shrinks below xtol + rtol*|x|.
template <class F>
double brent_root(F f, double a, double b, double fa, double fb,
                  double xtol = 1e-14, double rtol = 1e-14, int max_iter = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw std::invalid_argument("brent_root: endpoints do not bracket a root");

  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * rtol * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
      d = m; e = m;  // bisection
    } else {
      double p, q;
      const double s = fb / fa;
      if (a == c) {  // secant
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {  // inverse quadratic
        const double qa = fa / fc, r = fb / fc;
        p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d; d = p / q;
      } else {
        d = m; e = m;
      }
    }
    a = b; fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
    fb = f(b);
    if ((fb > 0) == (fc > 0)) { c = a; fc = fa; d = b - a; e = d; }
  }
  return b;
}

template <class F>
double brent_root(F f, double a, double b,
                  double xtol = 1e-14, double rtol = 1e-14, int max_iter = 200) {
  return brent_root(f, a, b, f(a), f(b), xtol, rtol, max_iter);
}

}  // namespace wse
