// Elliptic return sampling, Pearson correlation estimation, and spectra.

#pragma once

#include <Eigen/Dense>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wse/rng.hpp"
#include "wse/sigma_law.hpp"

namespace wse {

struct EnsembleParams {
  int N;  // variables
  int T;  // observations
  SigmaLaw sigma_law;

  EnsembleParams(int n, int t, SigmaLaw law) : N(n), T(t), sigma_law(std::move(law)) {
    if (N < 1 || T < 1) throw std::invalid_argument("EnsembleParams: N and T must be >= 1");
  }
  static EnsembleParams from_ratio(int n, double big_q, SigmaLaw law) {
    if (!(big_q > 0.0)) throw std::invalid_argument("EnsembleParams: Q must be positive");
    return EnsembleParams(n, static_cast<int>(std::llround(big_q * n)), std::move(law));
  }
  double Q() const { return static_cast<double>(T) / N; }
  double q() const { return static_cast<double>(N) / T; }
};

// Symmetric matrix playing any of the correlation-matrix roles (true,
// empirical, maximum-likelihood, cleaned). Construction enforces symmetry;
// positive semi-definiteness is an invariant of the producing operations.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("CorrelationMatrix: matrix must be square");
    const double scale = std::max(1e-300, m_.cwiseAbs().maxCoeff());
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-12 * scale))
      throw std::invalid_argument("CorrelationMatrix: matrix is not symmetric");
    if (!m_.allFinite()) throw std::invalid_argument("CorrelationMatrix: non-finite entries");
  }
  static CorrelationMatrix identity(int n) { return CorrelationMatrix(Eigen::MatrixXd::Identity(n, n)); }

  const Eigen::MatrixXd& matrix() const { return m_; }
  int size() const { return static_cast<int>(m_.rows()); }
  double trace() const { return m_.trace(); }

 private:
  Eigen::MatrixXd m_;
};

struct ReturnsMatrix {
  Eigen::MatrixXd values;                 // N x T
  std::optional<Eigen::VectorXd> sigma;   // per-column volatility record, when sampled

  int n() const { return static_cast<int>(values.rows()); }
  int t() const { return static_cast<int>(values.cols()); }
};

struct Spectrum {
  Eigen::VectorXd values;  // ascending
  int size() const { return static_cast<int>(values.size()); }
};

namespace detail {

// Square-root factor F with F F^T = C. Cholesky when definite, symmetric
// eigen square root otherwise (semi-definite inputs); rejects indefinite C.
inline Eigen::MatrixXd psd_factor(const CorrelationMatrix& c) {
  Eigen::LLT<Eigen::MatrixXd> llt(c.matrix());
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.matrix());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("psd_factor: eigendecomposition failed");
  const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
  Eigen::VectorXd clipped = es.eigenvalues();
  for (int i = 0; i < clipped.size(); ++i) {
    if (clipped(i) < -1e-10 * std::max(lmax, 1e-300))
      throw std::invalid_argument("psd_factor: matrix is not positive semi-definite");
    clipped(i) = std::sqrt(std::max(clipped(i), 0.0));
  }
  return es.eigenvectors() * clipped.asDiagonal();
}

}  // namespace detail

// Draw an N x T panel of elliptic returns: column t is sigma_t * F * z_t with
// z_t standard normal and F a square-root factor of trueC.
inline ReturnsMatrix sample_returns(const EnsembleParams& params, const CorrelationMatrix& trueC,
                                    std::mt19937_64& rng) {
  if (trueC.size() != params.N)
    throw std::invalid_argument("sample_returns: trueC dimension does not match params.N");
  const Eigen::MatrixXd factor = detail::psd_factor(trueC);
  std::normal_distribution<double> normal(0.0, 1.0);

  ReturnsMatrix out;
  out.values.resize(params.N, params.T);
  Eigen::VectorXd sig(params.T);
  Eigen::VectorXd z(params.N);
  for (int t = 0; t < params.T; ++t) {
    sig(t) = sample_sigma(params.sigma_law, rng);
    for (int i = 0; i < params.N; ++i) z(i) = normal(rng);
    out.values.col(t) = sig(t) * (factor * z);
  }
  out.sigma = sig;
  return out;
}

// Pearson estimator E = (1/T) sum_t r_t r_t^T. The T columns are first put
// into a canonical (lexicographic) order so that the floating-point
// accumulation — and therefore the output — is bit-identical under any
// permutation of the input columns.
inline CorrelationMatrix pearson_estimator(const ReturnsMatrix& returns) {
  const Eigen::MatrixXd& r = returns.values;
  if (!r.allFinite()) throw std::invalid_argument("pearson_estimator: returns contain non-finite values");
  const int n = returns.n(), t = returns.t();

  std::vector<int> order(t);
  for (int j = 0; j < t; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int i = 0; i < n; ++i) {
      if (r(i, a) < r(i, b)) return true;
      if (r(i, a) > r(i, b)) return false;
    }
    return false;
  });
  Eigen::MatrixXd sorted(n, t);
  for (int j = 0; j < t; ++j) sorted.col(j) = r.col(order[j]);

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  e.selfadjointView<Eigen::Lower>().rankUpdate(sorted, 1.0 / t);
  e.triangularView<Eigen::StrictlyUpper>() = e.transpose();
  return CorrelationMatrix(std::move(e));
}

// Full spectrum, ascending. Rejects non-symmetric input.
inline Spectrum eigenvalues(const CorrelationMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: eigensolver failed");
  return Spectrum{es.eigenvalues()};
}

struct Histogram {
  std::vector<double> edges;    // size B+1, strictly increasing
  std::vector<double> density;  // size B, integrates to 1 over the binned range
  std::vector<std::int64_t> counts;
};

inline Histogram histogram_from_values(const std::vector<double>& values,
                                       const std::vector<double>& edges) {
  if (values.empty()) throw std::invalid_argument("histogram: no values");
  if (edges.size() < 2) throw std::invalid_argument("histogram: need at least one bin");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1]))
      throw std::invalid_argument("histogram: bin edges must be strictly increasing");

  Histogram h;
  h.edges = edges;
  h.counts.assign(edges.size() - 1, 0);
  std::int64_t in_range = 0;
  for (double v : values) {
    if (v < edges.front() || v >= edges.back()) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    const std::size_t bin = static_cast<std::size_t>(it - edges.begin()) - 1;
    ++h.counts[std::min(bin, h.counts.size() - 1)];
    ++in_range;
  }
  h.density.assign(h.counts.size(), 0.0);
  if (in_range > 0)
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      h.density[b] = h.counts[b] / (static_cast<double>(in_range) * (edges[b + 1] - edges[b]));
  return h;
}

inline Histogram spectrum_histogram(const std::vector<Spectrum>& spectra,
                                    const std::vector<double>& edges) {
  if (spectra.empty()) throw std::invalid_argument("spectrum_histogram: no spectra");
  std::vector<double> pooled;
  for (const Spectrum& s : spectra)
    pooled.insert(pooled.end(), s.values.data(), s.values.data() + s.values.size());
  return histogram_from_values(pooled, edges);
}

// Pooled Pearson eigenvalues over independent samples; one RNG stream per
// sample, so the result is independent of thread count. Sorted ascending.
inline std::vector<double> pooled_pearson_eigenvalues(const EnsembleParams& params,
                                                      const CorrelationMatrix& trueC,
                                                      int n_samples, std::uint64_t seed) {
  std::vector<double> pooled(static_cast<std::size_t>(n_samples) * params.N);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_samples; ++k) {
    std::mt19937_64 rng = make_stream_rng(seed, static_cast<std::uint64_t>(k));
    const ReturnsMatrix r = sample_returns(params, trueC, rng);
    const Spectrum s = eigenvalues(pearson_estimator(r));
    std::copy(s.values.data(), s.values.data() + params.N,
              pooled.begin() + static_cast<std::size_t>(k) * params.N);
  }
  std::sort(pooled.begin(), pooled.end());
  return pooled;
}

// Monte Carlo mean of Tr(E^{-1})/N for Gaussian-Wishart Pearson matrices.
inline double wishart_inverse_trace_mc(int n, double big_q, int n_samples, std::uint64_t seed) {
  const EnsembleParams params = EnsembleParams::from_ratio(n, big_q, GaussianSigma{});
  const CorrelationMatrix eye = CorrelationMatrix::identity(n);
  std::vector<double> vals(n_samples);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_samples; ++k) {
    std::mt19937_64 rng = make_stream_rng(seed, static_cast<std::uint64_t>(k));
    const CorrelationMatrix e = pearson_estimator(sample_returns(params, eye, rng));
    vals[k] = e.matrix().inverse().trace() / n;
  }
  double acc = 0.0;
  for (double v : vals) acc += v;
  return acc / n_samples;
}

}  // namespace wse
