#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "wse/interp.hpp"
#include "wse/quadrature.hpp"
#include "wse/roots.hpp"

using wse::Complex;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const wse::QuadratureRule rule = wse::gauss_legendre(8);
  double acc = 0.0, mass = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    acc += rule.weights[i] * std::pow(rule.nodes[i], 14);
    mass += rule.weights[i];
  }
  CHECK(mass == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(acc == Catch::Approx(2.0 / 15.0).epsilon(1e-13));
}

TEST_CASE("gauss-laguerre moments match gamma-function values") {
  const double alpha = 1.7;
  const wse::QuadratureRule rule = wse::gauss_laguerre(48, alpha);
  double m0 = 0.0, m1 = 0.0, m3 = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    m0 += rule.weights[i];
    m1 += rule.weights[i] * rule.nodes[i];
    m3 += rule.weights[i] * std::pow(rule.nodes[i], 3);
  }
  CHECK(m0 == Catch::Approx(std::tgamma(alpha + 1)).epsilon(1e-13));
  CHECK(m1 == Catch::Approx(std::tgamma(alpha + 2)).epsilon(1e-13));
  CHECK(m3 == Catch::Approx(std::tgamma(alpha + 4)).epsilon(1e-13));
}

TEST_CASE("gauss-hermite second moment") {
  const wse::QuadratureRule rule = wse::gauss_hermite(32);
  double m0 = 0.0, m2 = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    m0 += rule.weights[i];
    m2 += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
  }
  CHECK(m0 == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-13));
  CHECK(m2 == Catch::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("adaptive gauss-kronrod handles real and complex integrands") {
  const double p20 = wse::integrate_adaptive<double>([](double x) { return std::pow(x, 20); },
                                                     0.0, 1.0, 1e-13);
  CHECK(p20 == Catch::Approx(1.0 / 21.0).epsilon(1e-12));

  const double s = wse::integrate_adaptive<double>([](double x) { return std::sin(x); },
                                                   0.0, M_PI, 1e-13);
  CHECK(s == Catch::Approx(2.0).epsilon(1e-12));

  const Complex e = wse::integrate_adaptive<Complex>(
      [](double x) { return std::exp(Complex(0.0, x)); }, 0.0, 1.0, 1e-13);
  CHECK(e.real() == Catch::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(e.imag() == Catch::Approx(1.0 - std::cos(1.0)).epsilon(1e-12));

  // near-singular peak
  const double lorentz = wse::integrate_adaptive<double>(
      [](double x) { return 1e-4 / ((x - 0.3) * (x - 0.3) + 1e-8); }, 0.0, 1.0, 1e-12, 20000);
  const double exact = std::atan((1.0 - 0.3) / 1e-4) + std::atan(0.3 / 1e-4);
  CHECK(lorentz == Catch::Approx(exact).epsilon(1e-9));
}

TEST_CASE("gamma weight expectations") {
  SECTION("normalization") {
    CHECK(wse::gamma_weight_integral([](double) { return 1.0; }, 3.3) ==
          Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("mean is mu/2") {
    CHECK(wse::gamma_weight_integral([](double s) { return s; }, 6.0) ==
          Catch::Approx(3.0).epsilon(1e-12));
  }
  SECTION("inverse moment is 1/(mu/2-1)") {
    CHECK(wse::gamma_weight_integral([](double s) { return 1.0 / s; }, 6.0) ==
          Catch::Approx(0.5).epsilon(1e-10));
  }
  SECTION("divergent integrand is rejected") {
    CHECK_THROWS_AS(wse::gamma_weight_integral([](double s) { return std::exp(2.0 * s); }, 6.0),
                    std::runtime_error);
  }
}

namespace {

// Complex exponential integral E1(z), principal branch: power series near the
// origin, modified-Lentz continued fraction elsewhere.
Complex expint_e1(Complex z) {
  if (std::abs(z) < 3.0) {
    const double euler_gamma = 0.57721566490153286;
    Complex sum{0.0, 0.0}, term{1.0, 0.0};
    for (int k = 1; k < 120; ++k) {
      term *= -z / static_cast<double>(k);
      sum += -term / static_cast<double>(k);
      if (std::abs(term) < 1e-20 * (1.0 + std::abs(sum))) break;
    }
    return -euler_gamma - std::log(z) + sum;
  }
  Complex b = z + 1.0, c{1e300, 0.0}, d = 1.0 / b, h = d;
  for (int i = 1; i < 300; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const Complex delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-z) * h;
}

// Closed forms for alpha = 2 (so the density is s^2 e^{-s} / 2):
//   int_0^inf p/(s-w)   = (1 + w + w^2 e^{-w} E1(-w)) / 2
//   int_0^inf p/(s-w)^2 = (1 - w + (2w - w^2) e^{-w} E1(-w)) / 2
Complex exact_c0(Complex w) {
  return (1.0 + w + w * w * std::exp(-w) * expint_e1(-w)) / 2.0;
}
Complex exact_c1(Complex w) {
  return (1.0 - w + (2.0 * w - w * w) * std::exp(-w) * expint_e1(-w)) / 2.0;
}

}  // namespace

TEST_CASE("complex exponential integral sanity") {
  // real values: E1(0.1) and E1(5) from standard tables
  CHECK(expint_e1(Complex(0.1, 0.0)).real() == Catch::Approx(1.8229239584).epsilon(1e-9));
  CHECK(expint_e1(Complex(5.0, 0.0)).real() == Catch::Approx(0.001148295591).epsilon(1e-8));
}

TEST_CASE("cauchy moments against the exponential-integral oracle") {
  const double alpha = 2.0;  // mu = 6
  const double norm = std::tgamma(alpha + 1.0);
  auto p = [&](double s) { return std::pow(s, alpha) * std::exp(-s) / norm; };
  auto dp = [&](double s) { return (alpha / s - 1.0) * p(s); };

  for (const Complex w : {Complex(0.3, 1e-6), Complex(0.3, 1e-3), Complex(2.0, 0.5),
                          Complex(-0.5, 1e-4), Complex(0.02, 1e-7), Complex(0.004, 1e-9),
                          Complex(-3.0, 0.0), Complex(8.0, 2.0)}) {
    const wse::CauchyMoments cm = wse::cauchy_moments(p, dp, w, 70.0, 1e-13);
    const Complex o0 = exact_c0(w);
    const Complex o1 = exact_c1(w);
    CAPTURE(w.real(), w.imag());
    CHECK(std::abs(cm.c0 - o0) < 1e-9 * std::max(1.0, std::abs(o0)));
    CHECK(std::abs(cm.c1 - o1) < 1e-7 * std::max(1.0, std::abs(o1)));
  }
}

TEST_CASE("pchip interpolation and integration") {
  std::vector<double> x = {0.0, 1.0, 2.0, 3.5, 5.0};
  std::vector<double> y = {0.0, 2.0, 4.0, 7.0, 10.0};  // linear: y = 2x
  wse::PchipInterpolant interp(x, y);
  CHECK(interp(2.75) == Catch::Approx(5.5).epsilon(1e-13));
  CHECK(interp.integral_to(5.0) == Catch::Approx(25.0).epsilon(1e-13));
  CHECK(interp.integral_to(1.0) == Catch::Approx(1.0).epsilon(1e-13));

  // monotone data stays monotone
  std::vector<double> ym = {0.0, 0.1, 0.11, 3.0, 3.01};
  wse::PchipInterpolant mono(x, ym);
  double prev = mono(0.0);
  for (double t = 0.05; t <= 5.0; t += 0.05) {
    const double v = mono(t);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("brent root finding") {
  const double r = wse::brent_root([](double x) { return std::cos(x); }, 1.0, 2.0);
  CHECK(r == Catch::Approx(M_PI / 2).epsilon(1e-12));
  CHECK_THROWS_AS(wse::brent_root([](double x) { return 1.0 + x * x; }, -1.0, 1.0),
                  std::invalid_argument);
}
