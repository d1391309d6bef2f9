// Kullback-Leibler entropies between multivariate Gaussian / elliptic laws
// and the spectrum-level benchmark values Z/N, Z'/N.
//
// All three entropy variants depend on (C1, C2) only through the generalized
// eigenvalues a_i of C2^{-1} C1, computed here by a symmetric-definite
// reduction (Cholesky of C2, congruence of C1) rather than an explicit
// inverse:
//
//   Gaussian:          S = 1/2 sum_i (a_i - log a_i - 1)
//   Student, finite:   S = -1/2 sum_i log a_i
//                        + (N+mu)/2 E_s[ log( (1 + tau/2s) / (1 + N/2s) ) ],
//                      tau = sum_i a_i, s ~ Gamma(mu/2, 1)
//   Student, large N:  S = -1/2 sum_i log a_i + N/2 log( tau / N )
//
// The benchmarks are the ensemble means of S/N for E vs. C ("Z") and for two
// independent empirical matrices ("Z'"). They do not depend on the true
// correlation matrix, so they reduce to integrals over the limiting density
// of states: Marchenko-Pastur in the Gaussian case, the Student DOS
// otherwise.

#pragma once

#include <Eigen/Dense>
#include <omp.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wse/dos.hpp"
#include "wse/ensemble.hpp"
#include "wse/marchenko_pastur.hpp"
#include "wse/quadrature.hpp"
#include "wse/rng.hpp"
#include "wse/stats.hpp"

namespace wse {

// Generalized eigenvalues of C2^{-1} C1, ascending.
inline Eigen::VectorXd generalized_eigenvalues(const CorrelationMatrix& c1,
                                               const CorrelationMatrix& c2) {
  if (c1.size() != c2.size()) throw std::invalid_argument("generalized_eigenvalues: size mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(c2.matrix());
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("generalized_eigenvalues: C2 is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd b =
      l.triangularView<Eigen::Lower>().solve(
          l.triangularView<Eigen::Lower>().solve(c1.matrix()).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("generalized_eigenvalues: solver failed");
  return es.eigenvalues();
}

inline double gaussian_kl(const CorrelationMatrix& c1, const CorrelationMatrix& c2) {
  const Eigen::VectorXd a = generalized_eigenvalues(c1, c2);
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (!(a(i) > 0.0)) throw std::invalid_argument("gaussian_kl: C1 must be positive definite");
    s += a(i) - std::log(a(i)) - 1.0;
  }
  return 0.5 * s;
}

inline double student_kl_finite(const CorrelationMatrix& c1, const CorrelationMatrix& c2,
                                double mu) {
  if (!(mu > 2.0)) throw std::invalid_argument("student_kl_finite: mu must exceed 2");
  const Eigen::VectorXd a = generalized_eigenvalues(c1, c2);
  const double n = static_cast<double>(a.size());
  double log_term = 0.0, tau = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (!(a(i) > 0.0)) throw std::invalid_argument("student_kl_finite: C1 must be positive definite");
    log_term += std::log(a(i));
    tau += a(i);
  }
  // integrand log((2s+tau)/(2s+n)) is smooth on (0, inf) with finite limits
  const double mix = gamma_weight_integral(
      [tau, n](double s) { return std::log((2.0 * s + tau) / (2.0 * s + n)); }, mu);
  return -0.5 * log_term + 0.5 * (n + mu) * mix;
}

inline double student_kl_large_n(const CorrelationMatrix& c1, const CorrelationMatrix& c2) {
  const Eigen::VectorXd a = generalized_eigenvalues(c1, c2);
  const double n = static_cast<double>(a.size());
  double log_term = 0.0, tau = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (!(a(i) > 0.0))
      throw std::invalid_argument("student_kl_large_n: C1 must be positive definite");
    log_term += std::log(a(i));
    tau += a(i);
  }
  return -0.5 * log_term + 0.5 * n * std::log(tau / n);
}

// --- benchmark values ---------------------------------------------------------

// Z/N for Gaussian data: 1/2 int rho_MP(l) (-log l + 1 - l) dl.
inline double z_gaussian(double big_q) {
  if (!(big_q > 1.0)) throw std::invalid_argument("z_gaussian: requires Q > 1");
  const double q = 1.0 / big_q;
  return 0.5 * mp_expectation([](double l) { return -std::log(l) + 1.0 - l; }, q);
}

// Z'/N for Gaussian data: -1/2 + 1/2 <lambda> <1/lambda> over Marchenko-Pastur.
inline double zprime_gaussian(double big_q) {
  if (!(big_q > 1.0))
    throw std::invalid_argument("zprime_gaussian: requires Q > 1 (the inverse moment diverges)");
  const double q = 1.0 / big_q;
  const double mean = mp_expectation([](double l) { return l; }, q);
  const double inv_mean = mp_expectation([](double l) { return 1.0 / l; }, q);
  return -0.5 + 0.5 * mean * inv_mean;
}

// Z/N and Z'/N under the Student DOS (large-N entropy).
inline double z_student(double big_q, double mu) {
  DosModel model(StudentSigma{mu}, big_q);
  const DosMoments m = model.moments();
  return -0.5 * m.mean_log + 0.5 * std::log(m.mean);
}

inline double zprime_student(double big_q, double mu) {
  DosModel model(StudentSigma{mu}, big_q);
  const DosMoments m = model.moments();
  return 0.5 * std::log(m.mean) + 0.5 * std::log(m.mean_inverse);
}

struct KLBenchmarks {
  std::optional<double> mu;  // empty: Gaussian
  double Q = 0.0;
  double z_over_n = 0.0;
  double zprime_over_n = 0.0;
  double dos_mass = 1.0;  // quadrature diagnostic: should be 1
};

inline KLBenchmarks kl_benchmarks(double big_q, std::optional<double> mu) {
  KLBenchmarks b;
  b.mu = mu;
  b.Q = big_q;
  if (mu) {
    DosModel model(StudentSigma{*mu}, big_q);
    const DosMoments m = model.moments();
    b.z_over_n = -0.5 * m.mean_log + 0.5 * std::log(m.mean);
    b.zprime_over_n = 0.5 * std::log(m.mean) + 0.5 * std::log(m.mean_inverse);
    b.dos_mass = m.mass;
  } else {
    b.z_over_n = z_gaussian(big_q);
    b.zprime_over_n = zprime_gaussian(big_q);
  }
  return b;
}

// --- Monte Carlo --------------------------------------------------------------

enum class KlMcMode { e_vs_c, e1_vs_e2 };

struct KlMcResult {
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

// Sample mean and standard error of S/N across independent replicas. Uses the
// large-N Student entropy for Student/log-normal laws and the Gaussian closed
// form for the delta law; this is what the Z, Z' benchmarks average.
inline KlMcResult kl_monte_carlo(const EnsembleParams& params, const CorrelationMatrix& trueC,
                                 KlMcMode mode, int n_samples, std::uint64_t seed) {
  if (!(params.Q() > 1.0)) throw std::invalid_argument("kl_monte_carlo: requires Q > 1");
  const bool gaussian = is_gaussian(params.sigma_law);
  std::vector<double> vals(n_samples);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_samples; ++k) {
    std::mt19937_64 rng = make_stream_rng(seed, static_cast<std::uint64_t>(k));
    const CorrelationMatrix e1 = pearson_estimator(sample_returns(params, trueC, rng));
    double s;
    if (mode == KlMcMode::e_vs_c) {
      s = gaussian ? gaussian_kl(e1, trueC) : student_kl_large_n(e1, trueC);
    } else {
      const CorrelationMatrix e2 = pearson_estimator(sample_returns(params, trueC, rng));
      s = gaussian ? gaussian_kl(e1, e2) : student_kl_large_n(e1, e2);
    }
    vals[k] = s / params.N;
  }
  const MeanStderr ms = mean_stderr(vals);
  return KlMcResult{ms.mean, ms.std_error, n_samples};
}

}  // namespace wse
