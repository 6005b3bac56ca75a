#pragma once

// CSV import/export. Machine-readable numbers use 17 significant digits so
// doubles round-trip exactly; the human-readable table uses 4 decimals.

#include <fmt/format.h>

#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mfcluster/dynamics.hpp"
#include "mfcluster/error.hpp"
#include "mfcluster/measures.hpp"
#include "mfcluster/stability.hpp"

namespace mfcluster::io {

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

inline void write_measure_csv(std::ostream& os, const EmpiricalMeasure& m) {
  os << "position,weight\n";
  for (std::size_t i = 0; i < m.size(); ++i) os << num(m.positions()[i]) << ',' << num(m.weights()[i]) << '\n';
}

inline void write_positions_csv(std::ostream& os, std::span<const double> x, std::span<const double> w) {
  os << "position,weight\n";
  for (std::size_t i = 0; i < x.size(); ++i) os << num(x[i]) << ',' << num(w[i]) << '\n';
}

/// Reads `position,weight` rows; the header line is required.
inline EmpiricalMeasure read_measure_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Io, "measure file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "position,weight") throw Error(ErrorCode::Io, "expected header 'position,weight', got '" + line + "'");
  std::vector<double> xs, ws;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": missing comma");
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      xs.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument(a);
      ws.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Io, "line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return EmpiricalMeasure::from_atoms(std::move(xs), std::move(ws));
}

/// `round,agent,position` for every `stride`-th round (the last round is always written).
inline void write_trajectory_csv(std::ostream& os, const IterationTrace& trace, std::size_t stride = 1) {
  if (stride == 0) stride = 1;
  os << "round,agent,position\n";
  const std::size_t last = trace.rounds.size() - 1;
  for (std::size_t r = 0; r <= last; ++r) {
    if (r % stride != 0 && r != last) continue;
    const std::vector<double>& x = trace.rounds[r];
    for (std::size_t j = 0; j < x.size(); ++j) os << r << ',' << j << ',' << num(x[j]) << '\n';
  }
}

inline constexpr const char* kClusterHeader =
    "Group,Coalescing Point,Iterations,Population %,Initial Range,Avg Initial,Avg Movement,Avg Cost";

inline void write_clusters_csv(std::ostream& os, const ClusterReport& rep) {
  os << kClusterHeader << '\n';
  for (std::size_t g = 0; g < rep.clusters.size(); ++g) {
    const Cluster& cl = rep.clusters[g];
    os << g + 1 << ',' << num(cl.center) << ','
       << (cl.coalesce_round ? std::to_string(*cl.coalesce_round) : std::string()) << ','
       << num(100.0 * cl.population_share) << ",\"[" << num(cl.range_lo) << ", " << num(cl.range_hi) << "]\","
       << num(cl.avg_initial_position) << ',' << num(cl.avg_total_movement) << ',' << num(cl.avg_total_cost)
       << '\n';
  }
}

/// Fixed-width table in the layout of the published result tables.
inline std::string format_cluster_table(const ClusterReport& rep) {
  std::string out = fmt::format("{:>5} | {:>10} | {:>10} | {:>9} | {:>20} | {:>9} | {:>9} | {:>12}\n", "Group",
                                "Coalescing", "Iterations", "Pop. %", "Initial Range", "Avg Init", "Avg Move",
                                "Avg Cost");
  for (std::size_t g = 0; g < rep.clusters.size(); ++g) {
    const Cluster& cl = rep.clusters[g];
    const std::string iters = cl.coalesce_round ? std::to_string(*cl.coalesce_round) : "-";
    const std::string range = fmt::format("[{:.4f}, {:.4f}]", cl.range_lo, cl.range_hi);
    out += fmt::format("{:>5} | {:>10.4f} | {:>10} | {:>8.2f}% | {:>20} | {:>9.4f} | {:>9.4f} | {:>12.4f}\n", g + 1,
                       cl.center + 0.0, iters, 100.0 * cl.population_share, range, cl.avg_initial_position + 0.0,
                       cl.avg_total_movement, cl.avg_total_cost);
  }
  out += fmt::format("isolated agents: {} ({:.4f}% of population)\n", rep.isolated_agents.size(),
                     100.0 * rep.isolated_share);
  return out;
}

/// `set,index,eigenvalue` rows for the full and restricted spectra of DE,
/// followed by one `verdict,<verdict>,<restricted spectral radius>` record.
inline void write_eigenvalues_csv(std::ostream& os, const StabilityReport& rep) {
  os << "set,index,eigenvalue\n";
  for (std::size_t i = 0; i < rep.dE_eigenvalues.size(); ++i) os << "dE," << i << ',' << num(rep.dE_eigenvalues[i]) << '\n';
  for (std::size_t i = 0; i < rep.restricted_eigenvalues.size(); ++i) {
    os << "restricted," << i << ',' << num(rep.restricted_eigenvalues[i]) << '\n';
  }
  os << "verdict," << to_string(rep.verdict) << ',' << num(rep.restricted_spectral_radius) << '\n';
}

}  // namespace mfcluster::io
