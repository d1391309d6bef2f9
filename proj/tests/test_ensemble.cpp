#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>

#include "wse/ensemble.hpp"
#include "wse/marchenko_pastur.hpp"
#include "wse/stats.hpp"

using wse::CorrelationMatrix;
using wse::EnsembleParams;

TEST_CASE("sigma law validation and sampling") {
  CHECK_THROWS_AS(wse::StudentSigma(2.0), std::invalid_argument);
  CHECK_THROWS_AS(wse::StudentSigma(1.5), std::invalid_argument);
  CHECK_THROWS_AS(wse::LogNormalSigma(-0.1), std::invalid_argument);

  std::mt19937_64 rng = wse::make_stream_rng(7, 0);
  SECTION("delta law is exactly one") {
    for (int i = 0; i < 10; ++i) CHECK(wse::sample_sigma(wse::GaussianSigma{}, rng) == 1.0);
  }

  SECTION("student law has unit mean square") {
    const wse::SigmaLaw law = wse::StudentSigma{6.0};
    const int n = 1000000;
    std::vector<double> sq(n);
    for (int i = 0; i < n; ++i) {
      const double s = wse::sample_sigma(law, rng);
      sq[i] = s * s;
    }
    const wse::MeanStderr ms = wse::mean_stderr(sq);
    CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.std_error);
  }

  SECTION("lognormal law has unit mean square") {
    const wse::SigmaLaw law = wse::LogNormalSigma{0.25};
    const int n = 1000000;
    std::vector<double> sq(n);
    for (int i = 0; i < n; ++i) {
      const double s = wse::sample_sigma(law, rng);
      sq[i] = s * s;
    }
    const wse::MeanStderr ms = wse::mean_stderr(sq);
    CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.std_error);
  }
}

TEST_CASE("student sigma tail exponent from a log-log survival fit") {
  const double mu = 6.0;
  const wse::SigmaLaw law = wse::StudentSigma{mu};
  std::mt19937_64 rng = wse::make_stream_rng(20260811, 1);
  const int n = 4000000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = wse::sample_sigma(law, rng);
  std::sort(draws.begin(), draws.end());

  std::vector<double> log_x, log_s;
  for (double survival : {1e-3, 5e-4, 2e-4, 1e-4, 5e-5, 2e-5}) {
    const std::size_t idx = static_cast<std::size_t>((1.0 - survival) * n);
    log_x.push_back(std::log(draws[idx]));
    log_s.push_back(std::log1p(-(static_cast<double>(idx) / n)) );
  }
  const wse::LinearFit fit = wse::linear_fit(log_x, log_s);
  CHECK(std::abs(fit.slope - (-mu)) < 0.2);
}

TEST_CASE("returns sampling") {
  SECTION("identity + delta law gives iid gaussian columns") {
    const EnsembleParams params(5, 50000, wse::GaussianSigma{});
    std::mt19937_64 rng = wse::make_stream_rng(3, 0);
    const wse::ReturnsMatrix r = wse::sample_returns(params, CorrelationMatrix::identity(5), rng);
    for (int i = 0; i < 5; ++i) {
      const double var = r.values.row(i).squaredNorm() / params.T;
      CHECK(std::abs(var - 1.0) < 0.02);
    }
    // cross-row covariance should vanish
    const double cov = r.values.row(0).dot(r.values.row(1)) / params.T;
    CHECK(std::abs(cov) < 0.02);
  }

  SECTION("normalized residuals obey the law of large numbers at N=1000") {
    const EnsembleParams params(1000, 40, wse::StudentSigma{6.0});
    std::mt19937_64 rng = wse::make_stream_rng(11, 0);
    const wse::ReturnsMatrix r = wse::sample_returns(params, CorrelationMatrix::identity(1000), rng);
    REQUIRE(r.sigma.has_value());
    double mean_abs_dev = 0.0;
    for (int t = 0; t < params.T; ++t) {
      const double eta_sq = (r.values.col(t) / (*r.sigma)(t)).squaredNorm() / params.N;
      mean_abs_dev += std::abs(eta_sq - 1.0);
      CHECK(std::abs(eta_sq - 1.0) < 0.2);  // 4.5 sigma per column
    }
    mean_abs_dev /= params.T;
    CHECK(mean_abs_dev < 0.05);
  }

  SECTION("non-PSD matrix is rejected") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues {3, -1}
    const EnsembleParams params(2, 4, wse::GaussianSigma{});
    std::mt19937_64 rng = wse::make_stream_rng(5, 0);
    CHECK_THROWS_AS(wse::sample_returns(params, CorrelationMatrix(bad), rng),
                    std::invalid_argument);
  }
}

TEST_CASE("pearson estimator") {
  SECTION("single observation is a rank-one projector") {
    wse::ReturnsMatrix r;
    r.values.resize(2, 1);
    r.values << 1.0, 2.0;
    const CorrelationMatrix e = wse::pearson_estimator(r);
    CHECK(e.matrix()(0, 0) == Catch::Approx(1.0));
    CHECK(e.matrix()(0, 1) == Catch::Approx(2.0));
    CHECK(e.matrix()(1, 1) == Catch::Approx(4.0));
    const wse::Spectrum s = wse::eigenvalues(e);
    CHECK(s.values(0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(s.values(1) == Catch::Approx(5.0).epsilon(1e-12));
  }

  SECTION("orthogonal rows of norm sqrt(T) give a diagonal estimator") {
    wse::ReturnsMatrix r;
    r.values.resize(2, 4);
    r.values << 1, 1, 1, 1,
                1, -1, 1, -1;
    const CorrelationMatrix e = wse::pearson_estimator(r);
    CHECK(e.matrix()(0, 1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(e.matrix()(0, 0) == Catch::Approx(1.0));
    CHECK(e.matrix()(1, 1) == Catch::Approx(1.0));
  }

  SECTION("matches a brute-force triple loop") {
    wse::ReturnsMatrix r;
    r.values.resize(2, 4);
    r.values << 0.3, -1.2, 0.7, 0.1,
                1.1, 0.4, -0.6, 0.9;
    const CorrelationMatrix e = wse::pearson_estimator(r);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t) acc += r.values(i, t) * r.values(j, t);
        CHECK(e.matrix()(i, j) == Catch::Approx(acc / 4.0).epsilon(1e-14));
      }
  }

  SECTION("column permutation leaves the output bit-identical") {
    const EnsembleParams params(8, 13, wse::StudentSigma{5.0});
    std::mt19937_64 rng = wse::make_stream_rng(17, 0);
    const wse::ReturnsMatrix r = wse::sample_returns(params, CorrelationMatrix::identity(8), rng);
    const CorrelationMatrix e1 = wse::pearson_estimator(r);

    std::vector<int> perm(13);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    wse::ReturnsMatrix shuffled;
    shuffled.values.resize(8, 13);
    for (int j = 0; j < 13; ++j) shuffled.values.col(j) = r.values.col(perm[j]);
    const CorrelationMatrix e2 = wse::pearson_estimator(shuffled);

    CHECK(std::memcmp(e1.matrix().data(), e2.matrix().data(), sizeof(double) * 64) == 0);
  }

  SECTION("output is PSD and the trace averages to N") {
    const EnsembleParams params(20, 40, wse::StudentSigma{6.0});
    const CorrelationMatrix eye = CorrelationMatrix::identity(20);
    std::vector<double> traces;
    double min_eig = 0.0;
    for (int k = 0; k < 400; ++k) {
      std::mt19937_64 rng = wse::make_stream_rng(23, k);
      const CorrelationMatrix e = wse::pearson_estimator(wse::sample_returns(params, eye, rng));
      const wse::Spectrum s = wse::eigenvalues(e);
      min_eig = std::min(min_eig, s.values(0));
      traces.push_back(e.trace() / params.N);
    }
    CHECK(min_eig >= -1e-10);
    const wse::MeanStderr ms = wse::mean_stderr(traces);
    CHECK(std::abs(ms.mean - 1.0) < 3.5 * ms.std_error);
  }
}

TEST_CASE("eigenvalues operation") {
  SECTION("identity") {
    const wse::Spectrum s = wse::eigenvalues(CorrelationMatrix::identity(3));
    for (int i = 0; i < 3; ++i) CHECK(s.values(i) == Catch::Approx(1.0));
  }
  SECTION("analytic 2x2") {
    Eigen::MatrixXd m(2, 2);
    m << 2, 1, 1, 2;
    const wse::Spectrum s = wse::eigenvalues(CorrelationMatrix(m));
    CHECK(s.values(0) == Catch::Approx(1.0).epsilon(1e-13));
    CHECK(s.values(1) == Catch::Approx(3.0).epsilon(1e-13));
  }
  SECTION("sum equals trace on a random PSD matrix") {
    std::mt19937_64 rng = wse::make_stream_rng(29, 0);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(6, 9);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 9; ++j) a(i, j) = normal(rng);
    Eigen::MatrixXd m = a * a.transpose() / 9.0;
    m = 0.5 * (m + m.transpose());
    const CorrelationMatrix c(m);
    const wse::Spectrum s = wse::eigenvalues(c);
    CHECK(s.values.sum() == Catch::Approx(c.trace()).margin(1e-10));
  }
  SECTION("non-symmetric input rejected at construction") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(CorrelationMatrix(m), std::invalid_argument);
  }
}

TEST_CASE("spectrum histogram") {
  SECTION("single bin normalization") {
    wse::Spectrum s;
    s.values.resize(3);
    s.values << 1, 1, 1;
    const wse::Histogram h = wse::spectrum_histogram({s}, {0.0, 2.0});
    CHECK(h.density[0] == Catch::Approx(0.5));
  }
  SECTION("empty input rejected") {
    CHECK_THROWS_AS(wse::spectrum_histogram({}, {0.0, 1.0}), std::invalid_argument);
    wse::Spectrum s;
    s.values.resize(1);
    s.values << 1.0;
    CHECK_THROWS_AS(wse::spectrum_histogram({s}, {1.0, 0.5}), std::invalid_argument);
  }
  SECTION("gaussian pipeline reproduces marchenko-pastur") {
    const EnsembleParams params(400, 800, wse::GaussianSigma{});
    const std::vector<double> pooled =
        wse::pooled_pearson_eigenvalues(params, CorrelationMatrix::identity(400), 20, 31);
    const double q = params.q();
    const double ks = wse::ks_distance(pooled, [q](double x) { return wse::mp_cdf(x, q); });
    CHECK(ks < 0.02);
  }
}
