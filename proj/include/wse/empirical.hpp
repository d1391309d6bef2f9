// Empirical protocol for real (or synthetic) daily-return panels: CSV
// ingestion, sliding windows, top-eigenvalue subtraction with bulk
// renormalization, significance cutoffs from the Student DOS, and the
// instantaneous-volatility rescaling
//
//   eta_i^t = (r_i^t / sigma_i^t) / sqrt( N^{-1} sum_j (r_j^t / sigma_j^t)^2 ),
//
// where sigma_i^t is the leave-one-out volatility proxy
// sqrt( sum_{t' != t} (r_i^{t'})^2 / T ).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wse/dos.hpp"
#include "wse/ensemble.hpp"
#include "wse/rng.hpp"
#include "wse/roots.hpp"

namespace wse {

struct ReturnsDataset {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;  // ISO, strictly increasing
  Eigen::MatrixXd values;          // N x T_total, row i = ticker i

  int n() const { return static_cast<int>(values.rows()); }
  int t_total() const { return static_cast<int>(values.cols()); }
};

enum class MissingPolicy { drop_date, zero_fill };

struct LoadedReturns {
  ReturnsDataset data;
  MissingPolicy policy = MissingPolicy::drop_date;
  std::vector<std::string> dropped_dates;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace detail

// Layout: header "date,<ticker>,..."; one row per date, ISO date first,
// decimal returns after; empty cells mark missing observations.
inline LoadedReturns load_returns(const std::string& path,
                                  MissingPolicy policy = MissingPolicy::drop_date) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_returns: cannot open '" + path + "'");

  LoadedReturns out;
  out.policy = policy;
  std::string line;
  int line_no = 0;

  while (std::getline(in, line) && (line.empty() || line[0] == '#')) ++line_no;
  ++line_no;
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 2)
    throw ParseError("load_returns: line " + std::to_string(line_no) + ": header needs a date column and at least one ticker");
  out.data.tickers.assign(header.begin() + 1, header.end());
  const std::size_t n = out.data.tickers.size();

  std::vector<std::string> dates;
  std::vector<std::vector<double>> columns;  // one vector per date
  std::vector<std::string> dropped;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != n + 1)
      throw ParseError("load_returns: line " + std::to_string(line_no) + ": expected " +
                       std::to_string(n + 1) + " cells, got " + std::to_string(cells.size()));
    const std::string& date = cells[0];
    if (!dates.empty() && !(dates.back() < date))
      throw ParseError("load_returns: line " + std::to_string(line_no) +
                       ": dates must be strictly increasing (" + dates.back() + " >= " + date + ")");
    std::vector<double> row(n, 0.0);
    bool missing = false;
    for (std::size_t j = 0; j < n; ++j) {
      const std::string& c = cells[j + 1];
      if (c.empty()) {
        missing = true;
        row[j] = 0.0;
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        throw ParseError("load_returns: line " + std::to_string(line_no) + ": cell '" + c +
                         "' is not a number");
      }
      if (used != c.size())
        throw ParseError("load_returns: line " + std::to_string(line_no) + ": cell '" + c +
                         "' has trailing garbage");
      if (!std::isfinite(v))
        throw ParseError("load_returns: line " + std::to_string(line_no) + ": non-finite value");
      row[j] = v;
    }
    if (missing && policy == MissingPolicy::drop_date) {
      dropped.push_back(date);
      continue;
    }
    dates.push_back(date);
    columns.push_back(std::move(row));
  }
  if (dates.empty()) throw ParseError("load_returns: no usable data rows");

  out.data.dates = dates;
  out.data.values.resize(static_cast<int>(n), static_cast<int>(dates.size()));
  for (std::size_t t = 0; t < columns.size(); ++t)
    for (std::size_t i = 0; i < n; ++i) out.data.values(static_cast<int>(i), static_cast<int>(t)) = columns[t][i];
  out.dropped_dates = std::move(dropped);
  return out;
}

inline void save_returns(const std::string& path, const ReturnsDataset& ds,
                         const std::vector<std::string>& comment_lines = {}) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("save_returns: cannot open '" + path + "' for writing");
  for (const std::string& c : comment_lines) outf << "# " << c << "\n";
  outf << "date";
  for (const std::string& t : ds.tickers) outf << "," << t;
  outf << "\n";
  char buf[40];
  for (int t = 0; t < ds.t_total(); ++t) {
    outf << ds.dates[t];
    for (int i = 0; i < ds.n(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.values(i, t));
      outf << "," << buf;
    }
    outf << "\n";
  }
}

// Windows [t0, t0 + window) advancing by `step`; count = floor((T-window)/step)+1.
inline std::vector<ReturnsMatrix> sliding_windows(const ReturnsDataset& ds, int window, int step) {
  if (window < 1 || step < 1) throw std::invalid_argument("sliding_windows: window and step must be >= 1");
  if (ds.t_total() < window)
    throw std::invalid_argument("sliding_windows: window exceeds the available history");
  std::vector<ReturnsMatrix> out;
  for (int t0 = 0; t0 + window <= ds.t_total(); t0 += step)
    out.push_back(ReturnsMatrix{ds.values.middleCols(t0, window), std::nullopt});
  return out;
}

struct ReducedSpectrum {
  Spectrum spectrum;   // N - k_m smallest eigenvalues, rescaled
  double scale = 1.0;  // 1 - (sum of top k_m eigenvalues)/N
};

// Remove the k_m largest eigenvalues (treated as signal) and rescale the
// retained bulk by 1 - sum_top/N so its mean comes back to ~1.
inline ReducedSpectrum subtract_top_and_renormalize(const Spectrum& spec, int k_m) {
  const int n = spec.size();
  if (k_m < 0 || k_m >= n)
    throw std::invalid_argument("subtract_top_and_renormalize: need 0 <= k_m < N");
  double top = 0.0;
  for (int i = n - k_m; i < n; ++i) top += spec.values(i);
  const double scale = 1.0 - top / n;
  if (!(scale > 0.0))
    throw std::invalid_argument(
        "subtract_top_and_renormalize: top eigenvalues carry the whole trace (scale <= 0)");
  ReducedSpectrum out;
  out.scale = scale;
  out.spectrum.values = spec.values.head(n - k_m) / scale;
  return out;
}

enum class CutoffModel { poisson_exceedance, all_below_power };

// lambda_p such that a size-N sample of the Student ensemble keeps all its
// eigenvalues below lambda_p with probability p. The default treats tail
// exceedances as Poisson (N (1 - F(lambda)) = -log p); the alternative uses
// independent draws (F(lambda)^N = p).
inline double significance_cutoff(const DosModel& model, int n, double p,
                                  CutoffModel which = CutoffModel::poisson_exceedance) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("significance_cutoff: need 0 < p < 1");
  if (n < 1) throw std::invalid_argument("significance_cutoff: need N >= 1");
  const double target = which == CutoffModel::poisson_exceedance
                            ? -std::log(p) / n
                            : 1.0 - std::pow(p, 1.0 / n);
  auto g = [&](double lam) { return (1.0 - model.cdf(lam)) - target; };
  double lo = model.lambda_min() * (1.0 + 1e-9);
  double hi = std::max(4.0, 2.0 * model.lambda_min());
  int guard = 0;
  while (g(hi) > 0.0 && ++guard < 200) hi *= 1.7;
  if (guard >= 200) throw DosError("significance_cutoff: failed to bracket the cutoff");
  return brent_root(g, lo, hi, 1e-12, 1e-12);
}

inline double significance_cutoff(double mu, double big_q, int n, double p,
                                  CutoffModel which = CutoffModel::poisson_exceedance) {
  DosModel model(StudentSigma{mu}, big_q);
  return significance_cutoff(model, n, p, which);
}

struct RescaledReturns {
  ReturnsDataset data;
  std::vector<std::string> dropped_dates;  // dates whose cross-section vanished
};

inline RescaledReturns volatility_proxy_rescale(const ReturnsDataset& ds) {
  const int n = ds.n(), t_total = ds.t_total();
  if (t_total < 2)
    throw std::invalid_argument("volatility_proxy_rescale: each stock needs >= 2 observations");
  Eigen::VectorXd ss = ds.values.rowwise().squaredNorm();

  RescaledReturns out;
  out.data.tickers = ds.tickers;
  std::vector<int> keep;
  Eigen::MatrixXd eta(n, t_total);
  for (int t = 0; t < t_total; ++t) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
      const double r = ds.values(i, t);
      const double var = (ss(i) - r * r) / t_total;  // leave-one-out
      x(i) = var > 0.0 ? r / std::sqrt(var) : 0.0;
    }
    const double denom = std::sqrt(x.squaredNorm() / n);
    if (!(denom > 0.0)) {
      out.dropped_dates.push_back(ds.dates[t]);
      continue;
    }
    eta.col(static_cast<int>(keep.size())) = x / denom;
    keep.push_back(t);
  }
  out.data.values = eta.leftCols(static_cast<int>(keep.size()));
  out.data.dates.reserve(keep.size());
  for (int t : keep) out.data.dates.push_back(ds.dates[t]);
  return out;
}

namespace detail {

inline std::string next_iso_date(const std::string& iso) {
  int y = std::stoi(iso.substr(0, 4)), m = std::stoi(iso.substr(5, 2)), d = std::stoi(iso.substr(8, 2));
  static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  const int dim = (m == 2 && leap) ? 29 : days[m - 1];
  if (++d > dim) {
    d = 1;
    if (++m > 12) {
      m = 1;
      ++y;
    }
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

}  // namespace detail

// Synthetic panel resembling a large equity universe: Student returns with a
// common market mode of loading beta (true correlation (1-b^2) I + b^2 J).
inline ReturnsDataset make_synthetic_dataset(int n, int t_total, double mu, double market_beta,
                                             std::uint64_t seed) {
  if (!(market_beta >= 0.0 && market_beta < 1.0))
    throw std::invalid_argument("make_synthetic_dataset: need 0 <= beta < 1");
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(n, n, market_beta * market_beta);
  c.diagonal().setOnes();
  const EnsembleParams params(n, t_total, StudentSigma{mu});
  std::mt19937_64 rng = make_stream_rng(seed, 0);
  const ReturnsMatrix r = sample_returns(params, CorrelationMatrix(std::move(c)), rng);

  ReturnsDataset ds;
  ds.values = r.values;
  ds.tickers.reserve(n);
  char buf[16];
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "S%04d", i + 1);
    ds.tickers.push_back(buf);
  }
  std::string date = "2003-01-02";
  ds.dates.reserve(t_total);
  for (int t = 0; t < t_total; ++t) {
    ds.dates.push_back(date);
    date = detail::next_iso_date(date);
  }
  return ds;
}

}  // namespace wse
