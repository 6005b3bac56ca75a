#pragma once

// The iterated game x_{k+1} = E(x_k) and what can be read off its orbits:
// fixed points, clusters, blockwise splitting and per-agent statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfcluster/coupling.hpp"
#include "mfcluster/equilibrium.hpp"
#include "mfcluster/error.hpp"
#include "mfcluster/measures.hpp"

namespace mfcluster {

/// True iff every pair of atoms is either within `tol` of each other or at
/// least r - tol apart. `x` must be sorted.
template <Kernel K>
bool is_fixed_point(std::span<const double> x, const Coupling<K>& c, double tol) {
  const double r = c.radius();
  for (std::size_t j = 0; j < x.size(); ++j) {
    // First atom strictly beyond the "coincident" band.
    const auto it = std::upper_bound(x.begin() + std::ptrdiff_t(j), x.end(), x[j] + tol);
    if (it != x.end() && *it < x[j] + r - tol) return false;
  }
  return true;
}

/// max_j |sum_k w_k phi'(x_j - x_k)|, which vanishes exactly at fixed points.
template <Kernel K>
double stationarity_residual(std::span<const double> x, std::span<const double> w, const Coupling<K>& c) {
  const AtomView m{x, w};
  double r = 0.0;
  for (double xj : x) r = std::max(r, std::abs(c.g_grad(xj, m)));
  return r;
}

struct Cluster {
  double center = 0.0;
  std::size_t first = 0;  // member indices are [first, last)
  std::size_t last = 0;
  double population_share = 0.0;
  std::optional<long> coalesce_round;
  double range_lo = 0.0;
  double range_hi = 0.0;
  double avg_initial_position = 0.0;
  double avg_total_movement = 0.0;
  double avg_total_cost = 0.0;

  std::size_t size() const noexcept { return last - first; }
};

struct ClusterReport {
  std::vector<Cluster> clusters;
  std::vector<std::size_t> isolated_agents;
  double isolated_share = 0.0;
};

inline constexpr double kDefaultIsolationShare = 0.001;

/// Single-linkage grouping of positions in index order (sorted up to
/// rounding): a new group starts wherever consecutive positions differ by
/// more than `gap`. Groups carrying less than
/// `isolation_share` of the mass are reported as isolated agents.
inline ClusterReport detect_clusters(std::span<const double> x, std::span<const double> w, double gap,
                                     double isolation_share = kDefaultIsolationShare) {
  if (x.size() != w.size()) throw Error(ErrorCode::LengthMismatch, "positions and weights differ in length");
  ClusterReport report;
  std::size_t first = 0;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    if (i < x.size() && x[i] - x[i - 1] <= gap) continue;
    double mass = 0.0, moment = 0.0;
    for (std::size_t k = first; k < i; ++k) {
      mass += w[k];
      moment += w[k] * x[k];
    }
    if (mass < isolation_share) {
      for (std::size_t k = first; k < i; ++k) report.isolated_agents.push_back(k);
      report.isolated_share += mass;
    } else {
      Cluster cl;
      cl.center = moment / mass;
      cl.first = first;
      cl.last = i;
      cl.population_share = mass;
      report.clusters.push_back(cl);
    }
    first = i;
  }
  return report;
}

enum class StopReason { Coalesced, MaxRounds, Stalled };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Coalesced: return "Coalesced";
    case StopReason::MaxRounds: return "MaxRounds";
    case StopReason::Stalled: return "Stalled";
  }
  return "Unknown";
}

struct IterationTrace {
  std::vector<std::vector<double>> rounds;  // rounds[0] is the initial configuration
  std::vector<double> weights;
  std::vector<double> per_agent_movement;
  std::vector<double> per_agent_cost;
  std::vector<long> picard_iters;  // per executed round
  StopReason stop_reason = StopReason::MaxRounds;

  std::size_t agents() const noexcept { return weights.size(); }
  long executed_rounds() const noexcept { return long(rounds.size()) - 1; }
  const std::vector<double>& initial() const { return rounds.front(); }
  const std::vector<double>& final() const { return rounds.back(); }
};

struct IterateOptions {
  long max_rounds = 100000;
  /// Agents whose round move is below coalesce_eps * t count as at rest;
  /// also the radius used for coalescence rounds.
  double coalesce_eps = 0.005;
  /// Cluster diameter below which a cluster counts as formed when deciding
  /// to stop early; non-positive means coalesce_eps.
  double collapse_tol = 0.0;
  /// Single-linkage gap for cluster detection; non-positive means r / 4.
  double cluster_gap = 0.0;
  double isolation_share = kDefaultIsolationShare;
  /// Called after each round with (round index, positions); may be empty.
  std::function<void(long, std::span<const double>)> on_round;
};

namespace detail {

/// Every agent moved less than `still` this round and every non-isolated
/// cluster has shrunk to diameter `collapse_tol`.
inline bool settled(std::span<const double> x, std::span<const double> w, std::span<const double> prev,
                    double gap, double isolation_share, double collapse_tol, double still) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(std::abs(x[j] - prev[j]) < still)) return false;
  }
  const ClusterReport rep = detect_clusters(x, w, gap, isolation_share);
  if (rep.clusters.empty()) return false;
  for (const Cluster& cl : rep.clusters) {
    const auto [lo, hi] = std::minmax_element(x.begin() + std::ptrdiff_t(cl.first), x.begin() + std::ptrdiff_t(cl.last));
    if (*hi - *lo > collapse_tol) return false;
  }
  return true;
}

}  // namespace detail

/// Plays the game repeatedly from m0, feeding each equilibrium back in as the
/// next initial configuration. The realized round cost of agent j is
/// |y_j - x_j|^2 / (2t) + G(y_j, mu_y).
///
/// Stops with Coalesced once the configuration is a fixed point to
/// 10 * picard_tol; with Stalled once every agent moves less than
/// coalesce_eps * t per round and every non-isolated cluster has diameter at
/// most collapse_tol; otherwise after max_rounds.
template <Kernel K>
IterationTrace iterate(const EmpiricalMeasure& m0, const GameConfig& cfg, const Coupling<K>& c,
                       const IterateOptions& opts = {}) {
  const std::size_t n = m0.size();
  const double gap = opts.cluster_gap > 0.0 ? opts.cluster_gap : 0.25 * c.radius();
  const double fixed_tol = 10.0 * cfg.picard_tol;
  const double collapse_tol = opts.collapse_tol > 0.0 ? opts.collapse_tol : opts.coalesce_eps;
  const double still = opts.coalesce_eps * cfg.t;
  const std::vector<double>& w = m0.weights();

  IterationTrace trace;
  trace.weights = w;
  trace.rounds.push_back(m0.positions());
  trace.per_agent_movement.assign(n, 0.0);
  trace.per_agent_cost.assign(n, 0.0);

  for (long round = 1; round <= opts.max_rounds; ++round) {
    const std::vector<double>& x = trace.rounds.back();
    EquilibriumResult eq;
    try {
      eq = tilde_E<K>(x, w, cfg, c);
    } catch (const Error& e) {
      throw Error(e.code(), "round " + std::to_string(round) + ": " + e.what());
    }
    std::vector<double>& y = eq.positions;

    detail::SortedAtoms scratch;
    scratch.assign(y, w);
    const AtomView after = scratch.view(y, w);
    for (std::size_t j = 0; j < n; ++j) {
      const double move = y[j] - x[j];
      trace.per_agent_movement[j] += std::abs(move);
      trace.per_agent_cost[j] += move * move / (2.0 * cfg.t) + c.g_value(y[j], after);
    }
    trace.picard_iters.push_back(eq.picard_iters);
    trace.rounds.push_back(std::move(y));
    const std::vector<double>& cur = trace.rounds.back();
    const std::vector<double>& prev = trace.rounds[trace.rounds.size() - 2];
    if (opts.on_round) opts.on_round(round, cur);

    if (is_fixed_point<K>(scratch.view(cur, w).positions, c, fixed_tol)) {
      trace.stop_reason = StopReason::Coalesced;
      return trace;
    }
    if (detail::settled(cur, w, prev, gap, opts.isolation_share, collapse_tol, still)) {
      trace.stop_reason = StopReason::Stalled;
      return trace;
    }
  }
  trace.stop_reason = StopReason::MaxRounds;
  return trace;
}

/// First round from which every member stays within eps of the member
/// positions' final weighted center; none for single agents or if the
/// final round itself is not within eps.
inline std::optional<long> coalesce_round(const IterationTrace& trace, std::size_t first, std::size_t last,
                                          double eps) {
  if (last - first < 2) return std::nullopt;
  const std::vector<double>& fin = trace.final();
  double mass = 0.0, moment = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    mass += trace.weights[k];
    moment += trace.weights[k] * fin[k];
  }
  const double center = moment / mass;
  auto within = [&](const std::vector<double>& xs) {
    for (std::size_t k = first; k < last; ++k) {
      if (std::abs(xs[k] - center) > eps) return false;
    }
    return true;
  };
  long r = long(trace.rounds.size()) - 1;
  if (!within(trace.rounds[std::size_t(r)])) return std::nullopt;
  while (r > 0 && within(trace.rounds[std::size_t(r - 1)])) --r;
  return r;
}

inline std::optional<long> coalesce_round(const IterationTrace& trace, const Cluster& cluster, double eps) {
  return coalesce_round(trace, cluster.first, cluster.last, eps);
}

/// Clusters of the final round with the per-group statistics of the result tables.
/// Averages are mass-weighted over members.
inline ClusterReport summarize_clusters(const IterationTrace& trace, double gap, double eps,
                                        double isolation_share = kDefaultIsolationShare) {
  const std::vector<double>& fin = trace.final();
  ClusterReport rep = detect_clusters(fin, trace.weights, gap, isolation_share);
  const std::vector<double>& init = trace.initial();
  for (Cluster& cl : rep.clusters) {
    double mass = 0.0, x0 = 0.0, mv = 0.0, cost = 0.0;
    cl.range_lo = init[cl.first];
    cl.range_hi = init[cl.first];
    for (std::size_t k = cl.first; k < cl.last; ++k) {
      const double wk = trace.weights[k];
      mass += wk;
      x0 += wk * init[k];
      mv += wk * trace.per_agent_movement[k];
      cost += wk * trace.per_agent_cost[k];
      cl.range_lo = std::min(cl.range_lo, init[k]);
      cl.range_hi = std::max(cl.range_hi, init[k]);
    }
    cl.avg_initial_position = x0 / mass;
    cl.avg_total_movement = mv / mass;
    cl.avg_total_cost = cost / mass;
    cl.coalesce_round = coalesce_round(trace, cl, eps);
  }
  return rep;
}

struct GameBlock {
  std::size_t first = 0;  // indices [first, last)
  std::size_t last = 0;
  double mass = 0.0;
  double horizon = 0.0;  // t * mass, i.e. t * (block size) / n for equal weights
};

/// Splits a sorted configuration into clusters (single linkage at `gap`) and
/// assigns each the rescaled horizon t * mass. Throws BlocksNotSeparated when
/// two neighbouring blocks are not more than r apart.
template <Kernel K>
std::vector<GameBlock> split_game(std::span<const double> x, std::span<const double> w, const GameConfig& cfg,
                                  const Coupling<K>& c, double gap = 0.0) {
  if (x.size() != w.size()) throw Error(ErrorCode::LengthMismatch, "positions and weights differ in length");
  if (!std::is_sorted(x.begin(), x.end())) throw Error(ErrorCode::InvalidArgument, "positions must be sorted");
  if (gap <= 0.0) gap = 0.25 * c.radius();
  const ClusterReport rep = detect_clusters(x, w, gap, 0.0);
  std::vector<GameBlock> blocks;
  for (const Cluster& cl : rep.clusters) {
    if (!blocks.empty() && !(x[cl.first] - x[blocks.back().last - 1] > c.radius())) {
      throw Error(ErrorCode::BlocksNotSeparated,
                  "blocks ending at index " + std::to_string(blocks.back().last - 1) + " are within r");
    }
    blocks.push_back({cl.first, cl.last, cl.population_share, cfg.t * cl.population_share});
  }
  return blocks;
}

/// E applied block by block, each block a separate game with its own
/// renormalized weights and horizon t * mass.
template <Kernel K>
std::vector<double> tilde_E_blockwise(std::span<const double> x, std::span<const double> w,
                                      const std::vector<GameBlock>& blocks, const GameConfig& cfg,
                                      const Coupling<K>& c) {
  std::vector<double> out(x.size());
  for (const GameBlock& b : blocks) {
    std::vector<double> bx(x.begin() + std::ptrdiff_t(b.first), x.begin() + std::ptrdiff_t(b.last));
    std::vector<double> bw(w.begin() + std::ptrdiff_t(b.first), w.begin() + std::ptrdiff_t(b.last));
    for (double& v : bw) v /= b.mass;
    const EquilibriumResult r = tilde_E<K>(bx, bw, with_horizon(cfg, b.horizon), c);
    std::copy(r.positions.begin(), r.positions.end(), out.begin() + std::ptrdiff_t(b.first));
  }
  return out;
}

}  // namespace mfcluster
