// Volatility mixing laws for elliptic return models. Returns are built as
// r_i^t = sigma_t * eta_i^t with i.i.d. Gaussian eta and sigma drawn from one
// of the laws below; every law is normalized so that E[sigma^2] = 1.
//
// The Student law draws sigma^2 = mu_bar / s with s ~ Gamma(mu/2, 1) and
// mu_bar = mu/2 - 1, which makes the returns multivariate Student with tail
// exponent mu and enforces E[sigma^2] = mu_bar * E[1/s] = 1 exactly.

#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>

namespace wse {

struct StudentSigma {
  double mu;  // tail exponent, > 2
  explicit StudentSigma(double mu_) : mu(mu_) {
    if (!(mu > 2.0))
      throw std::invalid_argument("StudentSigma: tail exponent mu must exceed 2 "
                                  "(E[sigma^2] = 1 is not attainable otherwise)");
  }
  double mu_bar() const { return 0.5 * mu - 1.0; }
};

// Degenerate law sigma = 1: plain Gaussian returns (classical Wishart case).
struct GaussianSigma {};

struct LogNormalSigma {
  double log_var;  // variance of log(sigma), >= 0
  explicit LogNormalSigma(double log_var_) : log_var(log_var_) {
    if (!(log_var >= 0.0)) throw std::invalid_argument("LogNormalSigma: log-variance must be >= 0");
  }
  // E[sigma^2] = exp(2 m + 2 w^2) = 1  =>  m = -w^2
  double log_mean() const { return -log_var; }
};

using SigmaLaw = std::variant<StudentSigma, GaussianSigma, LogNormalSigma>;

inline bool is_gaussian(const SigmaLaw& law) { return std::holds_alternative<GaussianSigma>(law); }
inline bool is_student(const SigmaLaw& law) { return std::holds_alternative<StudentSigma>(law); }

inline std::string law_name(const SigmaLaw& law) {
  if (std::holds_alternative<StudentSigma>(law)) return "student";
  if (std::holds_alternative<GaussianSigma>(law)) return "gaussian";
  return "lognormal";
}

// One volatility draw; always > 0.
inline double sample_sigma(const SigmaLaw& law, std::mt19937_64& rng) {
  struct Visitor {
    std::mt19937_64& rng;
    double operator()(const StudentSigma& l) const {
      std::gamma_distribution<double> gamma(0.5 * l.mu, 1.0);
      double s = 0.0;
      while (s <= 0.0) s = gamma(rng);
      return std::sqrt(l.mu_bar() / s);
    }
    double operator()(const GaussianSigma&) const { return 1.0; }
    double operator()(const LogNormalSigma& l) const {
      std::normal_distribution<double> normal(l.log_mean(), std::sqrt(l.log_var));
      return std::exp(normal(rng));
    }
  };
  return std::visit(Visitor{rng}, law);
}

}  // namespace wse
