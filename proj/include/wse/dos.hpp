// Analytic density of states of elliptic (Wishart-Student type) correlation
// ensembles.
//
// With q = 1/Q and the volatility law written through s (sigma^2 = mu_bar/s
// in the Student case), the boundary values G(lambda - i0) = G_R + i pi rho
// of the resolvent solve
//
//     lambda = 1/G + K0(G),     K0(x) = E_s[ mu_bar / (s - mu_bar x / Q) ],
//
// whose real and imaginary parts are the two coupled equations on
// (G_R, rho). Below the support the rho = 0 branch solves the same relation
// restricted to real negative G_R; the left edge is the stationary point
// 1 = G_R^2 K0'(G_R). Laws whose sigma^2 distribution has mass at arbitrarily
// large values (Student, log-normal) produce an unbounded support with a
// power-law right tail instead of a hard edge.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wse/ensemble.hpp"
#include "wse/interp.hpp"
#include "wse/marchenko_pastur.hpp"
#include "wse/quadrature.hpp"
#include "wse/roots.hpp"

namespace wse {

enum class DosBranch { gap, bulk, tail };

inline const char* branch_name(DosBranch b) {
  switch (b) {
    case DosBranch::gap: return "gap";
    case DosBranch::bulk: return "bulk";
    default: return "tail";
  }
}

struct SpectrumPoint {
  double lambda = 0.0;
  double g_real = 0.0;   // real part of the resolvent boundary value
  double rho = 0.0;      // density, >= 0; 0 on the gap branch
  DosBranch branch = DosBranch::bulk;
  double residual = 0.0;
};

struct DosSolverOptions {
  double residual_tol = 1e-10;
  int max_iter = 200;
  double rho_accept = 1e-9;    // bulk branch accepted above this density
  int quad_order = 96;         // base fixed-order rule; cross-checked at 1.5x
  double quad_tol = 1e-13;
};

struct DosMoments {
  double mass = 0.0;          // int rho
  double mean = 0.0;          // int lambda rho
  double mean_log = 0.0;      // int log(lambda) rho
  double mean_inverse = 0.0;  // int rho / lambda
};

struct SpectrumGridMetadata {
  std::string law;
  double mu = std::numeric_limits<double>::quiet_NaN();
  double Q = 0.0;
  int quad_order = 0;
  double residual_tol = 0.0;
  double lambda_min = 0.0;
  std::optional<double> lambda_max;
  double lambda_cut = 0.0;
  std::vector<std::string> diagnostics;
};

struct SpectrumGrid {
  std::vector<SpectrumPoint> points;
  SpectrumGridMetadata meta;
};

class DosError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Law-specific evaluation of K0 and K0' at complex or real arguments.
class ResolventKernels {
 public:
  ResolventKernels(const SigmaLaw& law, double big_q, const DosSolverOptions& opt)
      : law_(law), q_(big_q), opt_(opt) {
    if (const auto* st = std::get_if<StudentSigma>(&law_)) {
      alpha_ = 0.5 * st->mu - 1.0;
      mubar_ = st->mu_bar();
      gamma_norm_ = std::tgamma(0.5 * st->mu);
      rule_lo_ = gauss_laguerre(opt_.quad_order, alpha_);
      rule_hi_ = gauss_laguerre(opt_.quad_order + opt_.quad_order / 2, alpha_);
      s_max_ = 70.0 + 2.0 * std::max(0.0, alpha_);
    } else if (const auto* ln = std::get_if<LogNormalSigma>(&law_)) {
      // v = sigma^2 is log-normal: log v ~ N(mv, sv^2)
      mv_ = 2.0 * ln->log_mean();
      sv_ = 2.0 * std::sqrt(ln->log_var);
      rule_lo_ = gauss_hermite(opt_.quad_order);
      rule_hi_ = gauss_hermite(opt_.quad_order + opt_.quad_order / 2);
      s_max_ = std::exp(mv_ + 10.0 * std::max(sv_, 1e-8));
    }
  }

  double big_q() const { return q_; }
  const SigmaLaw& law() const { return law_; }
  double mu_bar() const { return mubar_; }

  void eval(Complex x, Complex* k0, Complex* k0p) const {
    if (std::holds_alternative<GaussianSigma>(law_)) {
      const Complex d = q_ - x;
      *k0 = q_ / d;
      *k0p = q_ / (d * d);
    } else if (std::holds_alternative<StudentSigma>(law_)) {
      eval_student(x, k0, k0p);
    } else {
      eval_lognormal(x, k0, k0p);
    }
  }

  void eval_real(double x, double* k0, double* k0p) const {
    Complex c0, c1;
    eval(Complex(x, 0.0), &c0, &c1);
    *k0 = c0.real();
    *k0p = c1.real();
  }

 private:
  void eval_student(Complex x, Complex* k0, Complex* k0p) const {
    const Complex w = mubar_ * x / q_;
    const double a = w.real(), b = std::abs(w.imag());

    const bool pole_risk = a > -0.05 && b < 0.3;
    if (!pole_risk) {
      Complex lo0, lo1, hi0, hi1;
      laguerre_pair(rule_lo_, w, &lo0, &lo1);
      laguerre_pair(rule_hi_, w, &hi0, &hi1);
      const double tol0 = 1e-11 * std::max(1.0, std::abs(hi0));
      const double tol1 = 1e-11 * std::max(1.0, std::abs(hi1));
      if (std::abs(hi0 - lo0) <= tol0 && std::abs(hi1 - lo1) <= tol1) {
        *k0 = mubar_ * hi0;
        *k0p = (mubar_ * mubar_ / q_) * hi1;
        return;
      }
    }
    auto p = [this](double s) { return std::pow(s, alpha_) * std::exp(-s) / gamma_norm_; };
    auto dp = [this, p](double s) { return (alpha_ / s - 1.0) * p(s); };
    const CauchyMoments cm = cauchy_moments(p, dp, w, s_max_, opt_.quad_tol);
    *k0 = mubar_ * cm.c0;
    *k0p = (mubar_ * mubar_ / q_) * cm.c1;
  }

  void eval_lognormal(Complex x, Complex* k0, Complex* k0p) const {
    if (sv_ <= 1e-12) {  // degenerate: same as the Gaussian delta law
      const Complex d = q_ - x;
      *k0 = q_ / d;
      *k0p = q_ / (d * d);
      return;
    }
    const Complex pole = q_ / x;  // pole location in v
    const double a = pole.real(), b = std::abs(pole.imag());
    const bool pole_risk = a > 0.3 * std::exp(mv_ - 6.0 * sv_) && a < s_max_ && b < 0.25 * (1.0 + std::abs(a));
    if (!pole_risk) {
      Complex lo0, lo1, hi0, hi1;
      hermite_pair(rule_lo_, x, &lo0, &lo1);
      hermite_pair(rule_hi_, x, &hi0, &hi1);
      const double tol0 = 1e-11 * std::max(1.0, std::abs(hi0));
      const double tol1 = 1e-11 * std::max(1.0, std::abs(hi1));
      if (std::abs(hi0 - lo0) <= tol0 && std::abs(hi1 - lo1) <= tol1) {
        *k0 = hi0;
        *k0p = hi1;
        return;
      }
    }
    auto p = [this](double v) {
      const double z = (std::log(v) - mv_) / sv_;
      return std::exp(-0.5 * z * z) / (v * sv_ * std::sqrt(2.0 * M_PI));
    };
    auto dp = [this, p](double v) {
      const double z = (std::log(v) - mv_) / sv_;
      return -p(v) * (1.0 + z / sv_) / v;
    };
    const CauchyMoments cm = cauchy_moments(p, dp, pole, s_max_, opt_.quad_tol);
    // v/(1 - x v / Q) = -pole - pole^2 / (v - pole)
    *k0 = -pole - pole * pole * cm.c0;
    *k0p = (q_ / (x * x)) * (1.0 + 2.0 * pole * cm.c0 + pole * pole * cm.c1);
  }

  void laguerre_pair(const QuadratureRule& rule, Complex w, Complex* c0, Complex* c1) const {
    Complex a0{0.0, 0.0}, a1{0.0, 0.0};
    for (int i = 0; i < rule.size(); ++i) {
      const Complex d = rule.nodes[i] - w;
      const Complex inv = 1.0 / d;
      a0 += rule.weights[i] * inv;
      a1 += rule.weights[i] * inv * inv;
    }
    *c0 = a0 / gamma_norm_;
    *c1 = a1 / gamma_norm_;
  }

  void hermite_pair(const QuadratureRule& rule, Complex x, Complex* k0, Complex* k0p) const {
    Complex a0{0.0, 0.0}, a1{0.0, 0.0};
    const double norm = std::sqrt(M_PI);
    for (int i = 0; i < rule.size(); ++i) {
      const double v = std::exp(mv_ + M_SQRT2 * sv_ * rule.nodes[i]);
      const Complex den = 1.0 - x * v / q_;
      a0 += rule.weights[i] * (v / den);
      a1 += rule.weights[i] * (v * v / q_) / (den * den);
    }
    *k0 = a0 / norm;
    *k0p = a1 / norm;
  }

  SigmaLaw law_;
  double q_ = 0.0;
  DosSolverOptions opt_;
  double alpha_ = 0.0, mubar_ = 0.0, gamma_norm_ = 1.0;
  double mv_ = 0.0, sv_ = 0.0;
  double s_max_ = 70.0;
  QuadratureRule rule_lo_, rule_hi_;
};

struct NewtonOutcome {
  Complex g{0.0, 0.0};
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

inline double residual_scale(double lambda) { return std::max(1.0, std::abs(lambda)); }

// Damped Newton iteration on Phi(G) = 1/G + K0(G) - lambda over the upper
// half plane of G (rho >= 0). Holomorphy of Phi makes the complex Newton
// step identical to the 2x2 real Newton step on the coupled equations.
inline NewtonOutcome newton_bulk(double lambda, Complex g0, const ResolventKernels& kernels,
                                 const DosSolverOptions& opt) {
  NewtonOutcome out;
  Complex g(g0.real(), std::max(g0.imag(), 1e-300));
  Complex k0, k0p;
  kernels.eval(g, &k0, &k0p);
  Complex phi = 1.0 / g + k0 - lambda;
  const double tol = opt.residual_tol * residual_scale(lambda);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    out.iterations = iter;
    if (std::abs(phi) <= tol) {
      out.g = g;
      out.residual = std::abs(phi);
      out.converged = true;
      return out;
    }
    const Complex dphi = -1.0 / (g * g) + k0p;
    const Complex step = -phi / dphi;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;

    bool accepted = false;
    double damp = 1.0;
    for (int back = 0; back < 24; ++back, damp *= 0.5) {
      Complex cand = g + damp * step;
      if (cand.imag() <= 0.0) cand = Complex(cand.real(), 0.25 * g.imag());
      if (cand.imag() <= 0.0 || cand == g) continue;
      Complex k0c, k0pc;
      kernels.eval(cand, &k0c, &k0pc);
      const Complex phic = 1.0 / cand + k0c - lambda;
      if (std::abs(phic) < std::abs(phi)) {
        g = cand;
        k0 = k0c;
        k0p = k0pc;
        phi = phic;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.g = g;
  out.residual = std::abs(phi);
  out.converged = std::abs(phi) <= tol;
  return out;
}

}  // namespace detail

// Tail coefficient A of the Student DOS: rho(lambda) ~ A lambda^{-1-mu/2},
// A = mu_bar^{mu/2} / (Gamma(mu/2) Q^{mu/2-1}).
inline double student_tail_coefficient(double mu, double big_q) {
  const double mubar = 0.5 * mu - 1.0;
  return std::pow(mubar, 0.5 * mu) / (std::tgamma(0.5 * mu) * std::pow(big_q, 0.5 * mu - 1.0));
}

// Full analytic model for one (law, Q) cell: edges, point solves, swept
// curve, CDF and spectral moments with power-law tail completion.
class DosModel {
 public:
  DosModel(SigmaLaw law, double big_q, DosSolverOptions opt = {})
      : law_(std::move(law)), q_(big_q), opt_(opt), kernels_(law_, big_q, opt) {
    if (!(big_q > 1.0)) throw std::invalid_argument("DosModel: requires Q = T/N > 1");
  }
  explicit DosModel(const EnsembleParams& params, DosSolverOptions opt = {})
      : DosModel(params.sigma_law, params.Q(), opt) {}

  const SigmaLaw& law() const { return law_; }
  double big_q() const { return q_; }
  double small_q() const { return 1.0 / q_; }
  const DosSolverOptions& options() const { return opt_; }

  // Left edge of the support (gap branch terminates here).
  double lambda_min() const {
    ensure_edge();
    return lambda_min_;
  }

  // Hard right edge for the Gaussian delta law; no right edge otherwise.
  std::optional<double> lambda_max() const {
    if (is_gaussian(law_)) return mp_edges(small_q()).second;
    if (const auto* ln = std::get_if<LogNormalSigma>(&law_); ln && ln->log_var <= 1e-24)
      return mp_edges(small_q()).second;
    return std::nullopt;
  }

  // Asymptotic power-law density (Student law only).
  double tail_density(double lambda) const {
    const auto* st = std::get_if<StudentSigma>(&law_);
    if (!st) throw std::invalid_argument("tail_density: law has no power-law tail");
    if (!(lambda > 0.0)) throw std::invalid_argument("tail_density: lambda must be positive");
    return student_tail_coefficient(st->mu, q_) * std::pow(lambda, -1.0 - 0.5 * st->mu);
  }

  // Crossover beyond which the solved bulk density matches the asymptotic
  // tail within 2%; the swept curve switches to the tail branch there.
  double lambda_cut() const {
    ensure_spine();
    return lambda_cut_;
  }

  SpectrumPoint solve_point(double lambda,
                            std::optional<std::pair<double, double>> init = std::nullopt) const;

  // Density at one lambda (0 in the gap, solved in the bulk, asymptotic
  // beyond the solved range).
  double density(double lambda) const;

  // Normalized CDF with tail completion.
  double cdf(double lambda) const;

  DosMoments moments() const {
    ensure_spine();
    return moments_;
  }

  SpectrumGrid curve(const std::vector<double>& grid) const;

  // Default lambda grid: gap lead-in, bulk, and tail decades.
  std::vector<double> default_grid(int n_points) const;

  std::vector<std::string> diagnostics() const {
    ensure_spine();
    return diagnostics_;
  }

 private:
  void ensure_edge() const;
  void ensure_spine() const;
  SpectrumPoint gap_point(double lambda) const;
  SpectrumPoint right_gap_point(double lambda) const;
  detail::NewtonOutcome bulk_attempts(double lambda,
                                      std::optional<std::pair<double, double>> init) const;
  Complex edge_expansion_init(double lambda) const;
  double lambda_of_real(double g) const {
    double k0, k0p;
    kernels_.eval_real(g, &k0, &k0p);
    return 1.0 / g + k0;
  }
  double edge_condition(double g) const {  // = G^2 K0'(G) - 1
    double k0, k0p;
    kernels_.eval_real(g, &k0, &k0p);
    return g * g * k0p - 1.0;
  }
  double tail_mass_above(double lambda) const;
  double tail_moment_above(double lambda, int which) const;  // 0:mass 1:mean 2:log 3:inverse

  SigmaLaw law_;
  double q_;
  DosSolverOptions opt_;
  detail::ResolventKernels kernels_;

  // lazily built state (single-threaded construction; build before sharing)
  mutable bool edge_ready_ = false;
  mutable double g_edge_ = 0.0, lambda_min_ = 0.0, curvature_ = 0.0;
  mutable bool spine_ready_ = false;
  mutable std::vector<double> spine_lambda_;
  mutable std::vector<Complex> spine_g_;
  mutable PchipInterpolant rho_interp_;
  mutable DosMoments moments_;
  mutable double lambda_deep_ = 0.0, lambda_cut_ = 0.0;
  mutable std::vector<std::string> diagnostics_;
};

inline void DosModel::ensure_edge() const {
  if (edge_ready_) return;
  // bracket the stationary point of lambda(G_R) on G_R < 0
  double g_hi = -0.02, f_hi = edge_condition(g_hi);
  while (f_hi > 0.0 && g_hi > -1e-9) {  // pathological: shrink toward 0
    g_hi *= 0.25;
    f_hi = edge_condition(g_hi);
  }
  double g_lo = g_hi;
  double f_lo = f_hi;
  for (int k = 0; k < 64 && f_lo <= 0.0; ++k) {
    g_lo *= 2.0;
    if (g_lo < -1e12) break;
    f_lo = edge_condition(g_lo);
  }
  if (!(f_lo > 0.0 && f_hi <= 0.0))
    throw DosError("left_edge: failed to bracket the interior maximum of the gap relation");
  g_edge_ = brent_root([this](double g) { return edge_condition(g); }, g_lo, g_hi, f_lo, f_hi,
                       1e-15, 1e-14);
  lambda_min_ = lambda_of_real(g_edge_);

  const double delta = 1e-5 * (1.0 + std::abs(g_edge_));
  auto lambda_prime = [this](double g) {
    double k0, k0p;
    kernels_.eval_real(g, &k0, &k0p);
    return -1.0 / (g * g) + k0p;
  };
  curvature_ = (lambda_prime(g_edge_ + delta) - lambda_prime(g_edge_ - delta)) / (2.0 * delta);
  if (!(curvature_ < 0.0)) curvature_ = -std::abs(curvature_) - 1e-12;
  edge_ready_ = true;
}

inline Complex DosModel::edge_expansion_init(double lambda) const {
  ensure_edge();
  const double dl = std::max(lambda - lambda_min_, 1e-14);
  return Complex(g_edge_, std::sqrt(2.0 * dl / (-curvature_)));
}

inline SpectrumPoint DosModel::gap_point(double lambda) const {
  ensure_edge();
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_point: lambda must be positive");
  // The relation lambda(G_R) decreases from lambda_min to -inf on (g_edge, 0),
  // so the physical gap root lies there; bracket by walking toward 0^-.
  double lo = g_edge_;
  double f_lo = lambda_min_ - lambda;
  double hi = g_edge_ * 1e-3;
  double f_hi = lambda_of_real(hi) - lambda;
  int guard = 0;
  while (f_hi > 0.0 && ++guard < 60) {
    hi *= 1e-2;
    if (hi > -1e-280) throw DosError("gap branch: bracketing failed approaching G_R = 0^-");
    f_hi = lambda_of_real(hi) - lambda;
  }
  const double g = brent_root([this, lambda](double x) { return lambda_of_real(x) - lambda; },
                              lo, hi, f_lo, f_hi, 1e-15, 1e-14);
  const double res = std::abs(lambda_of_real(g) - lambda);
  return SpectrumPoint{lambda, g, 0.0, DosBranch::gap, res};
}

inline SpectrumPoint DosModel::right_gap_point(double lambda) const {
  // Only the delta law has a hard right edge; above it the real branch lives
  // on G_R in (0, G_+), with lambda(G_R) decreasing from +inf to lambda_max.
  const double g_plus = q_ / (1.0 + std::sqrt(q_));  // stationary point for the delta law
  const double lo = 1e-12, hi = g_plus * (1.0 - 1e-12);
  auto f = [this, lambda](double g) { return lambda_of_real(g) - lambda; };
  const double g = brent_root(f, lo, hi, 1e-15, 1e-14);
  return SpectrumPoint{lambda, g, 0.0, DosBranch::gap, std::abs(f(g))};
}

inline detail::NewtonOutcome DosModel::bulk_attempts(
    double lambda, std::optional<std::pair<double, double>> init) const {
  ensure_edge();
  std::vector<Complex> starts;
  if (init) starts.emplace_back(init->first, M_PI * std::max(init->second, 1e-14));
  starts.push_back(edge_expansion_init(lambda));
  if (is_student(law_) && lambda > 4.0 * std::max(lambda_min_, 1.0)) {
    const double rho_guess = tail_density(lambda);
    starts.emplace_back(1.0 / lambda, M_PI * rho_guess);
  }
  for (double f : {0.3, 0.03, 1.0, 3.0}) {
    starts.emplace_back(g_edge_ * std::min(1.0, lambda_min_ / lambda),
                        f * std::abs(g_edge_));
  }
  detail::NewtonOutcome best;
  for (const Complex& s : starts) {
    const detail::NewtonOutcome o = detail::newton_bulk(lambda, s, kernels_, opt_);
    if (o.converged && o.g.imag() / M_PI >= opt_.rho_accept) return o;
    if (o.residual < best.residual) best = o;
  }
  return best;
}

inline SpectrumPoint DosModel::solve_point(double lambda,
                                           std::optional<std::pair<double, double>> init) const {
  ensure_edge();
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_point: lambda must be positive");
  if (const auto lmax = lambda_max(); lmax && lambda > *lmax) return right_gap_point(lambda);
  if (lambda < lambda_min_) return gap_point(lambda);
  const detail::NewtonOutcome o = bulk_attempts(lambda, init);
  if (o.converged && o.g.imag() / M_PI >= opt_.rho_accept)
    return SpectrumPoint{lambda, o.g.real(), o.g.imag() / M_PI, DosBranch::bulk, o.residual};
  if (o.converged)  // converged onto the real axis: effectively at/below the edge
    return SpectrumPoint{lambda, o.g.real(), 0.0, DosBranch::gap, o.residual};
  std::ostringstream msg;
  msg << "solve_point: no converged branch at lambda=" << lambda
      << " (best residual " << o.residual << " after " << o.iterations
      << " iterations, bulk branch attempted)";
  throw DosError(msg.str());
}

inline double DosModel::tail_mass_above(double lambda) const {
  return tail_moment_above(lambda, 0);
}

inline double DosModel::tail_moment_above(double lambda, int which) const {
  if (const auto* st = std::get_if<StudentSigma>(&law_)) {
    const double k = 0.5 * st->mu;
    const double a = student_tail_coefficient(st->mu, q_);
    const double lk = std::pow(lambda, -k);
    switch (which) {
      case 0: return a * lk / k;
      case 1: return a * std::pow(lambda, 1.0 - k) / (k - 1.0);
      case 2: return a * lk * (std::log(lambda) / k + 1.0 / (k * k));
      default: return a * std::pow(lambda, -1.0 - k) / (k + 1.0);
    }
  }
  if (const auto* ln = std::get_if<LogNormalSigma>(&law_); ln && ln->log_var > 1e-24) {
    // rare-event tail: one huge volatility day contributes lambda ~ v/Q, so
    // rho(lambda) ~ Q^2 P_v(Q lambda) far out
    const double mv = 2.0 * ln->log_mean(), sv = 2.0 * std::sqrt(ln->log_var);
    const double upper = std::exp(mv + 12.0 * sv) / q_;
    if (upper <= lambda) return 0.0;
    auto weighted = [&](double l) {
      const double v = q_ * l;
      const double z = (std::log(v) - mv) / sv;
      const double rho = q_ * q_ * std::exp(-0.5 * z * z) / (v * sv * std::sqrt(2.0 * M_PI));
      if (which == 1) return rho * l;
      if (which == 2) return rho * std::log(l);
      if (which == 3) return rho / l;
      return rho;
    };
    return integrate_adaptive<double>(weighted, lambda, upper, 1e-12);
  }
  return 0.0;  // hard right edge: nothing beyond
}

inline void DosModel::ensure_spine() const {
  if (spine_ready_) return;
  ensure_edge();

  if (is_gaussian(law_)) {  // closed Marchenko-Pastur forms
    const double q = small_q();
    moments_ = DosMoments{1.0, 1.0, mp_mean_log(q), mp_mean_inverse(q)};
    lambda_deep_ = mp_edges(q).second;
    lambda_cut_ = lambda_deep_;
    spine_ready_ = true;
    return;
  }

  // How far to solve before handing over to the analytic tail.
  if (const auto* st = std::get_if<StudentSigma>(&law_)) {
    const double k = 0.5 * st->mu;
    const double a = student_tail_coefficient(st->mu, q_);
    lambda_deep_ = std::clamp(std::pow(a / (k * 1e-9), 1.0 / k), 200.0, 1500.0);
  } else {
    const auto* ln = std::get_if<LogNormalSigma>(&law_);
    const double mv = 2.0 * ln->log_mean(), sv = 2.0 * std::sqrt(std::max(ln->log_var, 1e-24));
    lambda_deep_ = std::clamp(std::exp(mv + 5.5 * sv) / q_, 30.0, 2e4);
  }

  const double q = small_q();
  const double bulk_scale = std::max((1.0 + std::sqrt(q)) * (1.0 + std::sqrt(q)) - lambda_min_, 0.5);
  const double first_width = 0.3 * bulk_scale;

  std::vector<double> lam_nodes;
  std::vector<double> lam_weights;  // quadrature weight carried by each node
  const QuadratureRule gl32 = gauss_legendre(32);
  const QuadratureRule gl20 = gauss_legendre(20);

  // edge panel in u = sqrt(lambda - lambda_min): integrand is smooth in u
  {
    const double u_hi = std::sqrt(first_width);
    for (int i = 0; i < gl32.size(); ++i) {
      const double u = 0.5 * u_hi * (gl32.nodes[i] + 1.0);
      const double du = 0.5 * u_hi * gl32.weights[i];
      lam_nodes.push_back(lambda_min_ + u * u);
      lam_weights.push_back(2.0 * u * du);  // d lambda = 2 u du
    }
  }
  // geometric panels out to lambda_deep
  double left = lambda_min_ + first_width;
  while (left < lambda_deep_) {
    const double right = std::min(left * 1.6, lambda_deep_);
    for (int i = 0; i < gl20.size(); ++i) {
      const double lam = 0.5 * (right + left) + 0.5 * (right - left) * gl20.nodes[i];
      lam_nodes.push_back(lam);
      lam_weights.push_back(0.5 * (right - left) * gl20.weights[i]);
    }
    left = right;
  }

  spine_lambda_.clear();
  spine_g_.clear();
  DosMoments m{};
  std::optional<std::pair<double, double>> warm;
  int failures = 0;
  for (std::size_t i = 0; i < lam_nodes.size(); ++i) {
    SpectrumPoint pt;
    try {
      pt = solve_point(lam_nodes[i], warm);
    } catch (const DosError&) {
      if (++failures > 3) throw;
      continue;
    }
    warm = std::make_pair(pt.g_real, pt.rho);
    spine_lambda_.push_back(pt.lambda);
    spine_g_.push_back(Complex(pt.g_real, M_PI * pt.rho));
    m.mass += lam_weights[i] * pt.rho;
    m.mean += lam_weights[i] * pt.rho * pt.lambda;
    m.mean_log += lam_weights[i] * pt.rho * std::log(pt.lambda);
    m.mean_inverse += lam_weights[i] * pt.rho / pt.lambda;
  }
  m.mass += tail_moment_above(lambda_deep_, 0);
  m.mean += tail_moment_above(lambda_deep_, 1);
  m.mean_log += tail_moment_above(lambda_deep_, 2);
  m.mean_inverse += tail_moment_above(lambda_deep_, 3);
  moments_ = m;

  // CDF table over [lambda_min, lambda_deep]
  std::vector<double> xs, ys;
  xs.push_back(lambda_min_);
  ys.push_back(0.0);
  for (std::size_t i = 0; i < spine_lambda_.size(); ++i) {
    if (spine_lambda_[i] <= xs.back()) continue;
    xs.push_back(spine_lambda_[i]);
    ys.push_back(spine_g_[i].imag() / M_PI);
  }
  rho_interp_ = PchipInterpolant(xs, ys);

  // tail crossover (Student): first solved node past 10/Q from which every
  // later node matches the asymptote within 2%
  lambda_cut_ = lambda_deep_;
  if (is_student(law_)) {
    const double start = 10.0 / q_;
    std::vector<char> ok(spine_lambda_.size(), 0);
    for (std::size_t i = 0; i < spine_lambda_.size(); ++i) {
      const double rho = spine_g_[i].imag() / M_PI;
      const double tail = tail_density(spine_lambda_[i]);
      ok[i] = tail > 0.0 && std::abs(rho / tail - 1.0) < 0.02;
    }
    for (std::size_t i = 0; i < spine_lambda_.size(); ++i) {
      if (spine_lambda_[i] < start || !ok[i]) continue;
      bool all_ok = true;
      for (std::size_t j = i; j < spine_lambda_.size(); ++j) all_ok = all_ok && ok[j];
      if (all_ok) {
        lambda_cut_ = spine_lambda_[i];
        break;
      }
    }
  }
  if (failures > 0) {
    std::ostringstream d;
    d << failures << " spine node(s) skipped after solver failure";
    diagnostics_.push_back(d.str());
  }
  spine_ready_ = true;
}

inline double DosModel::density(double lambda) const {
  ensure_edge();
  if (lambda <= lambda_min_) return 0.0;
  if (const auto lmax = lambda_max()) {
    if (lambda >= *lmax) return 0.0;
    return mp_density(lambda, small_q());
  }
  ensure_spine();
  if (lambda > lambda_deep_) {
    if (is_student(law_)) return tail_density(lambda);
    const auto* ln = std::get_if<LogNormalSigma>(&law_);
    const double mv = 2.0 * ln->log_mean(), sv = 2.0 * std::sqrt(std::max(ln->log_var, 1e-24));
    const double v = q_ * lambda;
    const double z = (std::log(v) - mv) / sv;
    return q_ * q_ * std::exp(-0.5 * z * z) / (v * sv * std::sqrt(2.0 * M_PI));
  }
  // warm start from the nearest spine node
  std::optional<std::pair<double, double>> warm;
  if (!spine_lambda_.empty()) {
    auto it = std::lower_bound(spine_lambda_.begin(), spine_lambda_.end(), lambda);
    std::size_t idx = std::min<std::size_t>(it - spine_lambda_.begin(), spine_lambda_.size() - 1);
    warm = std::make_pair(spine_g_[idx].real(), spine_g_[idx].imag() / M_PI);
  }
  return solve_point(lambda, warm).rho;
}

inline double DosModel::cdf(double lambda) const {
  ensure_edge();
  if (lambda <= lambda_min_) return 0.0;
  if (is_gaussian(law_)) return mp_cdf(lambda, small_q());
  ensure_spine();
  const double total = moments_.mass;
  if (lambda >= lambda_deep_)
    return std::clamp(1.0 - tail_mass_above(lambda) / total, 0.0, 1.0);
  return std::clamp(rho_interp_.integral_to(lambda) / total, 0.0, 1.0);
}

inline SpectrumGrid DosModel::curve(const std::vector<double>& grid) const {
  ensure_edge();
  ensure_spine();
  SpectrumGrid out;
  out.meta.law = law_name(law_);
  if (const auto* st = std::get_if<StudentSigma>(&law_)) out.meta.mu = st->mu;
  out.meta.Q = q_;
  out.meta.quad_order = opt_.quad_order;
  out.meta.residual_tol = opt_.residual_tol;
  out.meta.lambda_min = lambda_min_;
  out.meta.lambda_max = lambda_max();
  out.meta.lambda_cut = lambda_cut_;
  out.meta.diagnostics = diagnostics_;

  std::optional<std::pair<double, double>> warm;
  for (double lam : grid) {
    if (!(lam > 0.0)) throw std::invalid_argument("dos_curve: grid values must be positive");
    if (is_student(law_) && lam > lambda_cut_) {
      out.points.push_back(SpectrumPoint{lam, 1.0 / lam, tail_density(lam), DosBranch::tail, 0.0});
      continue;
    }
    SpectrumPoint pt = solve_point(lam, warm);
    if (pt.branch == DosBranch::bulk) warm = std::make_pair(pt.g_real, pt.rho);
    out.points.push_back(pt);
  }
  return out;
}

inline std::vector<double> DosModel::default_grid(int n_points) const {
  ensure_edge();
  ensure_spine();
  const double lo = std::max(1e-6, 0.7 * lambda_min_);
  const double bulk_hi = lambda_max() ? *lambda_max() * 1.1
                                      : std::min(lambda_cut_, 8.0 * (1.0 + std::sqrt(small_q())) *
                                                                  (1.0 + std::sqrt(small_q())));
  const double hi = lambda_max() ? *lambda_max() * 1.2 : std::max(4.0 * lambda_cut_, 60.0);
  const int n_bulk = lambda_max() ? n_points : (3 * n_points) / 4;
  std::vector<double> grid;
  for (int i = 0; i < n_bulk; ++i)
    grid.push_back(lo + (bulk_hi - lo) * i / std::max(1, n_bulk - 1));
  if (!lambda_max()) {
    const int n_tail = n_points - n_bulk;
    for (int i = 1; i <= n_tail; ++i)
      grid.push_back(bulk_hi * std::pow(hi / bulk_hi, static_cast<double>(i) / n_tail));
  }
  return grid;
}

// --- free-function forms ------------------------------------------------------

inline SpectrumPoint solve_dos_point(double lambda, const EnsembleParams& params,
                                     std::optional<std::pair<double, double>> init = std::nullopt) {
  return DosModel(params).solve_point(lambda, init);
}

inline double left_edge(const EnsembleParams& params) { return DosModel(params).lambda_min(); }

inline std::optional<double> right_edge_or_none(const EnsembleParams& params) {
  return DosModel(params).lambda_max();
}

inline double tail_density(double lambda, const EnsembleParams& params) {
  return DosModel(params).tail_density(lambda);
}

inline SpectrumGrid dos_curve(const EnsembleParams& params, const std::vector<double>& grid) {
  return DosModel(params).curve(grid);
}

}  // namespace wse
