// Output plumbing: run manifests and the column-oriented CSV emitters.
// Every file starts with '#'-prefixed manifest lines (JSON, one object), so
// a single file is self-describing and reproducible: re-running the recorded
// command with the recorded seed regenerates it byte for byte. Volatile
// details (wall time) are deliberately kept out of the files.

#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wse/dos.hpp"
#include "wse/ensemble.hpp"
#include "wse/version.hpp"

namespace wse {

struct RunManifest {
  std::string command;          // subcommand name
  nlohmann::json config;        // full flag set
  std::uint64_t seed = 0;
  std::string version = kVersion;

  nlohmann::json to_json() const {
    return nlohmann::json{{"command", command},
                          {"config", config},
                          {"seed", seed},
                          {"version", version}};
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

inline void write_manifest(std::ofstream& out, const RunManifest& manifest) {
  out << "# manifest: " << manifest.to_json().dump() << "\n";
}

}  // namespace detail

inline void write_spectrum_grid_csv(const std::string& path, const SpectrumGrid& grid,
                                    const RunManifest& manifest) {
  std::ofstream out = detail::open_output(path);
  detail::write_manifest(out, manifest);
  out << "# law=" << grid.meta.law << " Q=" << detail::fmt_double(grid.meta.Q);
  if (grid.meta.mu == grid.meta.mu) out << " mu=" << detail::fmt_double(grid.meta.mu);
  out << " lambda_min=" << detail::fmt_double(grid.meta.lambda_min);
  if (grid.meta.lambda_max) out << " lambda_max=" << detail::fmt_double(*grid.meta.lambda_max);
  out << " lambda_cut=" << detail::fmt_double(grid.meta.lambda_cut)
      << " quad_order=" << grid.meta.quad_order
      << " residual_tol=" << detail::fmt_double(grid.meta.residual_tol) << "\n";
  for (const std::string& d : grid.meta.diagnostics) out << "# diagnostic: " << d << "\n";
  out << "lambda,G_R,rho,branch\n";
  for (const SpectrumPoint& p : grid.points)
    out << detail::fmt_double(p.lambda) << "," << detail::fmt_double(p.g_real) << ","
        << detail::fmt_double(p.rho) << "," << branch_name(p.branch) << "\n";
}

inline void write_histogram_csv(const std::string& path, const Histogram& hist,
                                const RunManifest& manifest,
                                const std::vector<std::string>& extra_comments = {}) {
  std::ofstream out = detail::open_output(path);
  detail::write_manifest(out, manifest);
  for (const std::string& c : extra_comments) out << "# " << c << "\n";
  out << "bin_left,bin_right,density,count\n";
  for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b)
    out << detail::fmt_double(hist.edges[b]) << "," << detail::fmt_double(hist.edges[b + 1]) << ","
        << detail::fmt_double(hist.density[b]) << "," << hist.counts[b] << "\n";
}

// Generic (x, series...) emitter for overlay curves.
inline void write_series_csv(const std::string& path, const std::vector<std::string>& column_names,
                             const std::vector<std::vector<double>>& columns,
                             const RunManifest& manifest,
                             const std::vector<std::string>& extra_comments = {}) {
  if (column_names.size() != columns.size() || columns.empty())
    throw std::invalid_argument("write_series_csv: column mismatch");
  std::ofstream out = detail::open_output(path);
  detail::write_manifest(out, manifest);
  for (const std::string& c : extra_comments) out << "# " << c << "\n";
  for (std::size_t j = 0; j < column_names.size(); ++j)
    out << (j ? "," : "") << column_names[j];
  out << "\n";
  for (std::size_t i = 0; i < columns[0].size(); ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j)
      out << (j ? "," : "") << detail::fmt_double(columns[j][i]);
    out << "\n";
  }
}

}  // namespace wse
