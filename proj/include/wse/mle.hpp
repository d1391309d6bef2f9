// Maximum-likelihood estimation of the correlation matrix under multivariate
// Student returns. The estimator is the fixed point of
//
//   M  <-  (N + mu)/T  sum_t  r_t r_t^T / (mu + r_t^T M^{-1} r_t),
//
// iterated from the trace-normalized Pearson matrix. The map is homogeneous
// (r -> c r, M -> c^2 M leaves it invariant), so the output is pinned by the
// correlation convention trace = N. In the large-N regime the denominators
// self-average and the estimator's spectrum collapses onto Marchenko-Pastur;
// as mu -> infinity the fixed point reduces to the Pearson estimator.

#pragma once

#include <Eigen/Dense>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wse/ensemble.hpp"
#include "wse/marchenko_pastur.hpp"
#include "wse/rng.hpp"
#include "wse/stats.hpp"

namespace wse {

struct MLEConfig {
  double mu;                         // tail exponent of the Student model
  double tol = 1e-9;                 // relative Frobenius change at convergence
  int max_iter = 500;
  bool simplified_large_n = false;   // drop mu: self-normalized large-N map
  double ridge_condition = 1e12;     // regularize iterates beyond this condition number
};

struct MLEResult {
  Eigen::MatrixXd estimator;             // trace-normalized to N
  int iterations = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
  bool ridge_applied = false;
  CorrelationMatrix correlation() const { return CorrelationMatrix(estimator); }
};

class MleError : public std::runtime_error {
 public:
  MleError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double last_residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

inline MLEResult mle_solve_full(const ReturnsMatrix& returns, const MLEConfig& cfg,
                                std::optional<Eigen::MatrixXd> init = std::nullopt) {
  const int n = returns.n(), t = returns.t();
  if (t <= n)
    throw std::invalid_argument("mle_solve: requires T > N so iterates stay invertible");
  if (!(cfg.mu > 0.0)) throw std::invalid_argument("mle_solve: mu must be positive");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw std::invalid_argument("mle_solve: bad config");
  const Eigen::MatrixXd& r = returns.values;
  if (!r.allFinite()) throw std::invalid_argument("mle_solve: non-finite returns");

  Eigen::MatrixXd m;
  if (init) {
    m = *init;
  } else {
    m = Eigen::MatrixXd::Zero(n, n);
    m.selfadjointView<Eigen::Lower>().rankUpdate(r, 1.0 / t);
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  }
  m *= n / m.trace();

  MLEResult out;
  double prev_residual = std::numeric_limits<double>::infinity();
  bool damping = false;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
      m += (1e-10 * m.trace() / n) * Eigen::MatrixXd::Identity(n, n);
      out.ridge_applied = true;
      llt.compute(m);
      if (llt.info() != Eigen::Success)
        throw MleError("mle_solve: iterate is numerically singular even after ridging",
                       prev_residual);
    } else {
      const auto& l = llt.matrixLLT();
      double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        dmax = std::max(dmax, l(i, i));
        dmin = std::min(dmin, l(i, i));
      }
      if (dmax * dmax > cfg.ridge_condition * dmin * dmin) {
        m += (1e-10 * m.trace() / n) * Eigen::MatrixXd::Identity(n, n);
        out.ridge_applied = true;
        llt.compute(m);
      }
    }

    const Eigen::MatrixXd x = llt.solve(r);
    Eigen::VectorXd weights(t);
    for (int j = 0; j < t; ++j) {
      const double d = r.col(j).dot(x.col(j));  // r^T M^{-1} r
      weights(j) = cfg.simplified_large_n ? n / (t * d) : (n + cfg.mu) / (t * (cfg.mu + d));
      if (!(weights(j) > 0.0) || !std::isfinite(weights(j)))
        throw MleError("mle_solve: non-positive column weight (singular iterate?)", prev_residual);
    }
    const Eigen::MatrixXd scaled = r * weights.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
    next.selfadjointView<Eigen::Lower>().rankUpdate(scaled, 1.0);
    next.triangularView<Eigen::StrictlyUpper>() = next.transpose();

    const double residual = (next - m).norm() / m.norm();
    out.residual_history.push_back(residual);
    if (damping)
      m = 0.5 * (next + m);
    else
      m = next;
    out.iterations = iter;
    out.final_residual = residual;
    if (residual <= cfg.tol) {
      m *= n / m.trace();
      out.estimator = m;
      return out;
    }
    if (residual > prev_residual && iter > 3) damping = true;
    prev_residual = residual;
  }
  throw MleError("mle_solve: no convergence after " + std::to_string(cfg.max_iter) +
                     " iterations (last relative change " + std::to_string(out.final_residual) + ")",
                 out.final_residual);
}

inline CorrelationMatrix mle_solve(const ReturnsMatrix& returns, const MLEConfig& cfg) {
  return mle_solve_full(returns, cfg).correlation();
}

// Self-consistency diagnostics d_t = eta_t^T E*^{-1} eta_t / N; their mean
// approaches 1 in the large-N Student regime. Uses the recorded volatility
// path when available (eta = r / sigma), otherwise treats returns as eta.
inline std::vector<double> mle_denominator_check(const ReturnsMatrix& returns,
                                                 const CorrelationMatrix& estar) {
  const int n = returns.n(), t = returns.t();
  if (estar.size() != n) throw std::invalid_argument("mle_denominator_check: size mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(estar.matrix());
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("mle_denominator_check: estimator is singular");
  Eigen::MatrixXd eta = returns.values;
  if (returns.sigma) {
    for (int j = 0; j < t; ++j) eta.col(j) /= (*returns.sigma)(j);
  }
  const Eigen::MatrixXd x = llt.solve(eta);
  std::vector<double> d(t);
  for (int j = 0; j < t; ++j) d[j] = eta.col(j).dot(x.col(j)) / n;
  return d;
}

struct MpComparison {
  std::vector<double> pooled_eigenvalues;  // sorted ascending
  double ks_distance = 0.0;
};

// Pooled MLE spectra over Monte Carlo samples vs. the Marchenko-Pastur CDF.
inline MpComparison mle_spectrum_vs_mp(const EnsembleParams& params, int n_samples,
                                       std::uint64_t seed, MLEConfig cfg) {
  if (!(params.Q() > 1.0)) throw std::invalid_argument("mle_spectrum_vs_mp: requires Q > 1");
  const CorrelationMatrix eye = CorrelationMatrix::identity(params.N);
  MpComparison out;
  out.pooled_eigenvalues.resize(static_cast<std::size_t>(n_samples) * params.N);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_samples; ++k) {
    std::mt19937_64 rng = make_stream_rng(seed, static_cast<std::uint64_t>(k));
    const ReturnsMatrix r = sample_returns(params, eye, rng);
    const MLEResult res = mle_solve_full(r, cfg);
    const Spectrum s = eigenvalues(res.correlation());
    std::copy(s.values.data(), s.values.data() + params.N,
              out.pooled_eigenvalues.begin() + static_cast<std::size_t>(k) * params.N);
  }
  std::sort(out.pooled_eigenvalues.begin(), out.pooled_eigenvalues.end());
  const double q = params.q();
  out.ks_distance = ks_distance(out.pooled_eigenvalues, [q](double x) { return mp_cdf(x, q); });
  return out;
}

}  // namespace wse
