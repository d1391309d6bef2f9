// Quadrature toolbox: Gauss rules from the Golub-Welsch eigenproblem,
// an adaptive Gauss-Kronrod 15(7) scheme for real or complex integrands,
// and Cauchy-kernel integrals of probability densities on [0, inf) with
// analytic singularity subtraction near the pole.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace wse {

using Complex = std::complex<double>;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Nodes/weights from the symmetric tridiagonal Jacobi matrix of an
// orthogonal polynomial family; mu0 is the total weight-measure mass.
inline QuadratureRule golub_welsch(const std::vector<double>& diag,
                                   const std::vector<double>& offdiag, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) jacobi(i, i) = diag[i];
  for (int i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag[i];
    jacobi(i + 1, i) = offdiag[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) throw std::runtime_error("golub_welsch: eigensolver failed");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace detail

// Weight 1 on [-1, 1].
inline QuadratureRule gauss_legendre(int n) {
  std::vector<double> diag(n, 0.0), off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return detail::golub_welsch(diag, off, 2.0);
}

// Weight s^alpha e^{-s} on [0, inf); alpha > -1. Weights sum to Gamma(alpha+1).
inline QuadratureRule gauss_laguerre(int n, double alpha) {
  if (alpha <= -1.0) throw std::invalid_argument("gauss_laguerre: alpha must be > -1");
  std::vector<double> diag(n), off(n - 1);
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + alpha + 1.0;
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k * (k + alpha));
  return detail::golub_welsch(diag, off, std::tgamma(alpha + 1.0));
}

// Weight e^{-x^2} on R. Weights sum to sqrt(pi).
inline QuadratureRule gauss_hermite(int n) {
  std::vector<double> diag(n, 0.0), off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
  return detail::golub_welsch(diag, off, std::sqrt(M_PI));
}

namespace detail {

// Gauss-Kronrod 15(7) abscissae/weights on [-1, 1].
inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kGk15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kG7Weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F, class R>
void gk15_panel(F& f, double a, double b, R& integral, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  R k15{}, g7{};
  for (int i = 0; i < 8; ++i) {
    const double dx = h * kGk15Nodes[i];
    R v = f(c + dx);
    if (i < 7) v += f(c - dx);
    k15 += kGk15Weights[i] * v;
    if (i % 2 == 1) g7 += kG7Weights[i / 2] * v;  // odd slots are the Gauss-7 nodes
  }
  k15 *= h;
  g7 *= h;
  integral = k15;
  err = std::abs(k15 - g7);
}

}  // namespace detail

struct AdaptiveResult {
  bool converged = true;
  double err = 0.0;
};

// Adaptive GK15 on [a, b]; R is double or Complex. Splits the worst panel
// first until the summed error estimate drops below abs_tol.
template <class R, class F>
R integrate_adaptive(F f, double a, double b, double abs_tol = 1e-12,
                     int max_panels = 4000, AdaptiveResult* out = nullptr) {
  struct Panel {
    double a, b, err;
    R val;
  };
  std::vector<Panel> panels;
  Panel p0{a, b, 0.0, R{}};
  detail::gk15_panel(f, a, b, p0.val, p0.err);
  panels.push_back(p0);
  double total_err = p0.err;
  while (total_err > abs_tol && static_cast<int>(panels.size()) < max_panels) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < panels.size(); ++i)
      if (panels[i].err > panels[worst].err) worst = i;
    Panel parent = panels[worst];
    const double mid = 0.5 * (parent.a + parent.b);
    if (mid <= parent.a || mid >= parent.b) break;  // interval exhausted
    Panel left{parent.a, mid, 0.0, R{}}, right{mid, parent.b, 0.0, R{}};
    detail::gk15_panel(f, left.a, left.b, left.val, left.err);
    detail::gk15_panel(f, right.a, right.b, right.val, right.err);
    total_err += left.err + right.err - parent.err;
    panels[worst] = left;
    panels.push_back(right);
  }
  R sum{};
  // accumulate in abscissa order for run-to-run determinism
  std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  for (const Panel& p : panels) sum += p.val;
  if (out) {
    out->converged = total_err <= abs_tol;
    out->err = total_err;
  }
  return sum;
}

// Same, over a list of breakpoints.
template <class R, class F>
R integrate_adaptive_segments(F f, const std::vector<double>& breaks, double abs_tol = 1e-12,
                              int max_panels = 4000, AdaptiveResult* out = nullptr) {
  R sum{};
  double err = 0.0;
  bool ok = true;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] <= breaks[i]) continue;
    AdaptiveResult r;
    sum += integrate_adaptive<R>(f, breaks[i], breaks[i + 1],
                                 abs_tol / static_cast<double>(breaks.size()), max_panels, &r);
    err += r.err;
    ok = ok && r.converged;
  }
  if (out) {
    out->converged = ok;
    out->err = err;
  }
  return sum;
}

// --- Cauchy-kernel integrals -------------------------------------------------

// c0 = int_0^smax p(s)/(s-w) ds,  c1 = int_0^smax p(s)/(s-w)^2 ds
// for a smooth density p on (0, smax) and a pole w off the integration path.
struct CauchyMoments {
  Complex c0{0.0, 0.0};
  Complex c1{0.0, 0.0};
};

namespace detail {

inline Complex log_diff(Complex hi, Complex lo) { return std::log(hi) - std::log(lo); }

// Exact integrals of 1/(s-w), 1/(s-w)^2 and (s-a)/(s-w)^2 over [l, r].
// Valid when the horizontal path [l, r] does not cross the pole, which
// holds for Im w != 0 and for real w outside [l, r].
struct KernelPrimitives {
  Complex L1, L2, L3;
  KernelPrimitives(double l, double r, Complex w, double a) {
    const Complex dl = Complex(l, 0.0) - w, dr = Complex(r, 0.0) - w;
    L1 = log_diff(dr, dl);
    L2 = 1.0 / dl - 1.0 / dr;
    L3 = L1 + (w - Complex(a, 0.0)) * L2;
  }
};

}  // namespace detail

// Density evaluator contract: p(s) and dp(s) = p'(s), both cheap.
template <class P, class DP>
CauchyMoments cauchy_moments(P p, DP dp, Complex w, double s_max, double abs_tol = 1e-13) {
  const double a = w.real();
  const double b = std::abs(w.imag());
  CauchyMoments res;

  const bool pole_inside = a > 0.0 && a < s_max;
  const bool needs_subtraction = pole_inside && b < std::min(0.04 * a, 0.05);

  if (needs_subtraction) {
    // Window around the pole where p is replaced by its linearization.
    const double h = std::min({0.5 * a, 0.5 * (s_max - a), 0.5});
    const double l = a - h, r = a + h;
    const double pa = p(a), dpa = dp(a);
    const detail::KernelPrimitives prim(l, r, w, a);

    auto rem0 = [&](double s) -> Complex { return (p(s) - pa) / (Complex(s, 0.0) - w); };
    auto rem1 = [&](double s) -> Complex {
      const Complex d = Complex(s, 0.0) - w;
      return (p(s) - pa - dpa * (s - a)) / (d * d);
    };
    auto plain0 = [&](double s) -> Complex { return p(s) / (Complex(s, 0.0) - w); };
    auto plain1 = [&](double s) -> Complex {
      const Complex d = Complex(s, 0.0) - w;
      return p(s) / (d * d);
    };

    res.c0 = integrate_adaptive<Complex>(rem0, l, r, abs_tol) + pa * prim.L1;
    res.c1 = integrate_adaptive<Complex>(rem1, l, r, abs_tol) + pa * prim.L2 + dpa * prim.L3;
    for (int seg = 0; seg < 2; ++seg) {
      const double lo = seg == 0 ? 0.0 : r, hi = seg == 0 ? l : s_max;
      if (hi <= lo) continue;
      res.c0 += integrate_adaptive<Complex>(plain0, lo, hi, abs_tol);
      res.c1 += integrate_adaptive<Complex>(plain1, lo, hi, abs_tol);
    }
    return res;
  }

  // Pole away from the path: direct adaptive integration, with breakpoints
  // steering refinement toward the closest approach.
  std::vector<double> breaks = {0.0, s_max};
  if (pole_inside) {
    for (double m : {a - 8 * b, a - b, a + b, a + 8 * b})
      if (m > 0.0 && m < s_max) breaks.push_back(m);
    std::sort(breaks.begin(), breaks.end());
  }
  auto f0 = [&](double s) -> Complex { return p(s) / (Complex(s, 0.0) - w); };
  auto f1 = [&](double s) -> Complex {
    const Complex d = Complex(s, 0.0) - w;
    return p(s) / (d * d);
  };
  res.c0 = integrate_adaptive_segments<Complex>(f0, breaks, abs_tol);
  res.c1 = integrate_adaptive_segments<Complex>(f1, breaks, abs_tol);
  return res;
}

// --- Gamma-weight expectations ----------------------------------------------

// E[f(s)] under P(s) = s^{mu/2-1} e^{-s} / Gamma(mu/2). Two fixed-order
// Gauss-Laguerre rules cross-validate each other; disagreement falls back to
// adaptive integration, and a diverging error estimate is reported as an error.
template <class F>
double gamma_weight_integral(F f, double mu, double* abs_err = nullptr) {
  if (!(mu > 2.0)) throw std::invalid_argument("gamma_weight_integral: mu must exceed 2");
  const double alpha = 0.5 * mu - 1.0;
  const double norm = std::tgamma(0.5 * mu);
  static thread_local std::vector<std::pair<double, std::pair<QuadratureRule, QuadratureRule>>> cache;
  const QuadratureRule* lo = nullptr;
  const QuadratureRule* hi = nullptr;
  for (auto& entry : cache)
    if (entry.first == alpha) {
      lo = &entry.second.first;
      hi = &entry.second.second;
    }
  if (!lo) {
    cache.emplace_back(alpha, std::make_pair(gauss_laguerre(96, alpha), gauss_laguerre(144, alpha)));
    lo = &cache.back().second.first;
    hi = &cache.back().second.second;
  }
  auto apply = [&](const QuadratureRule& rule) {
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
    return acc / norm;
  };
  const double v_lo = apply(*lo), v_hi = apply(*hi);
  double err = std::abs(v_hi - v_lo);
  double value = v_hi;
  const double tol = 1e-10 * std::max(1.0, std::abs(v_hi));
  if (!(err <= tol) || !std::isfinite(value)) {
    // adaptive fallback with the weight written out explicitly
    auto g = [&](double s) -> double {
      return std::pow(s, alpha) * std::exp(-s) * f(s) / norm;
    };
    const double s_max = std::max(60.0, 2.0 * alpha + 60.0);
    AdaptiveResult info;
    const double v_ad = integrate_adaptive_segments<double>(
        g, {0.0, 0.5, 4.0, s_max}, 1e-12, 8000, &info);
    err = std::abs(v_ad - v_hi) + info.err;
    if (!info.converged || !std::isfinite(v_ad) ||
        std::abs(v_ad - v_hi) > 1e-4 * std::max(1.0, std::abs(v_ad))) {
      throw std::runtime_error("gamma_weight_integral: error estimate diverges (integrand not integrable against the Gamma weight?)");
    }
    value = v_ad;
    err = info.err;
  }
  if (abs_err) *abs_err = err;
  return value;
}

}  // namespace wse
