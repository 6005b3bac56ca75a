#pragma once

// One round of the game: best responses, the map F(z) = y^z(x) and its
// fixed point E(x) computed by inexact Picard iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfcluster/coupling.hpp"
#include "mfcluster/error.hpp"
#include "mfcluster/measures.hpp"

namespace mfcluster {

/// How the inner Newton budget eps_k is chosen for Picard step k.
enum class InnerTolerance {
  /// eps_k = alpha^k, exactly the hypothesis of the inexact contraction lemma.
  Geometric,
  /// eps_k = min(alpha^k, 0.1 * |z_k - z_{k-1}|); still satisfies eps_k <= alpha^k.
  Adaptive,
};

struct GameConfig {
  double t = 0.0;
  double lambda1 = 0.0;
  double lipschitz = 0.0;
  double sup_slope = 0.0;
  double alpha = 0.0;
  double newton_tol = 1e-14;
  double picard_tol = 1e-10;
  int max_newton_iters = 200;
  int max_picard_iters = 100000;
  InnerTolerance inner = InnerTolerance::Adaptive;
};

/// tL1 / (1 - t lambda1), the Lipschitz constant of m -> y_t^m.
inline double contraction_factor(double t, double lambda1, double lipschitz) {
  return t * lipschitz / (1.0 - t * lambda1);
}

inline double contraction_factor(const GameConfig& cfg) {
  return contraction_factor(cfg.t, cfg.lambda1, cfg.lipschitz);
}

/// Builds a config for horizon t, rejecting t outside (0, 1/(lambda1 + L1)).
template <Kernel K>
GameConfig make_game_config(const Coupling<K>& c, double t, double picard_tol = 1e-10) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon t must be positive");
  if (!(t * (c.lambda1() + c.lipschitz()) < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "horizon t = " + std::to_string(t) + " exceeds the uniqueness bound 1/(lambda1 + L1)");
  }
  if (!(picard_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "picard_tol must be positive");
  GameConfig cfg;
  cfg.t = t;
  cfg.lambda1 = c.lambda1();
  cfg.lipschitz = c.lipschitz();
  cfg.sup_slope = c.sup_slope();
  cfg.alpha = contraction_factor(cfg);
  cfg.picard_tol = picard_tol;
  return cfg;
}

/// Same config with a different horizon (constants and tolerances kept).
inline GameConfig with_horizon(GameConfig cfg, double t) {
  if (!(t > 0.0) || !(t * (cfg.lambda1 + cfg.lipschitz) < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon out of range");
  }
  cfg.t = t;
  cfg.alpha = contraction_factor(cfg);
  return cfg;
}

/// Right-hand side of the inexact Picard error estimate:
/// alpha^k (2(k - alpha k + 1)/(1 - alpha)^2 + |z_1 - z_0|/(1 - alpha)).
inline double error_bound(long k, double alpha, double first_step_norm) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "k must be non-negative");
  const double kk = double(k);
  const double q = 1.0 - alpha;
  return std::pow(alpha, kk) * (2.0 * (kk - alpha * kk + 1.0) / (q * q) + first_step_norm / q);
}

struct BestResponse {
  double y = 0.0;
  double residual = 0.0;  // |y + t D_yG(y, m) - x|
  int iterations = 0;
};

/// Solves y + t D_yG(y, m) = x by Newton's method, safeguarded by bisection on
/// the bracket [x - t sup|phi'|, x + t sup|phi'|] which always contains the root.
/// Stops once the residual is at most `tol`, or when the bracket has collapsed
/// to adjacent doubles.
template <Kernel K>
BestResponse solve_best_response(double x, AtomView m, const GameConfig& cfg, const Coupling<K>& c,
                                 double tol, double guess) {
  const double t = cfg.t;
  double lo = x - t * cfg.sup_slope;
  double hi = x + t * cfg.sup_slope;
  double y = std::clamp(guess, lo, hi);
  BestResponse best{y, std::numeric_limits<double>::infinity(), 0};
  for (int it = 0; it < cfg.max_newton_iters; ++it) {
    const auto [g1, g2] = c.g_grad_hess(y, m);
    const double f = y + t * g1 - x;
    if (std::abs(f) < best.residual) best = {y, std::abs(f), it};
    if (std::abs(f) <= tol) return best;
    if (f < 0.0) {
      lo = y;
    } else {
      hi = y;
    }
    double next = y - f / (1.0 + t * g2);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == y || std::nextafter(lo, hi) >= hi) {
      // No representable improvement left.
      best.iterations = it + 1;
      return best;
    }
    y = next;
  }
  throw Error(ErrorCode::NonConvergence,
              "Newton did not reach residual " + std::to_string(tol) + " for x = " + std::to_string(x));
}

/// The unique minimizer of |x - y|^2/(2t) + G(y, m).
template <Kernel K>
double best_response(double x, AtomView m, const GameConfig& cfg, const Coupling<K>& c) {
  return solve_best_response(x, m, cfg, c, cfg.newton_tol, x).y;
}

template <Kernel K>
double best_response(double x, const EmpiricalMeasure& m, const GameConfig& cfg, const Coupling<K>& c) {
  return best_response(x, m.view(), cfg, c);
}

namespace detail {

/// Sorted copy of (z, w) when z is not already ascending; `order` maps sorted slots to indices.
struct SortedAtoms {
  std::vector<double> positions;
  std::vector<double> weights;
  bool permuted = false;

  void assign(std::span<const double> z, std::span<const double> w) {
    permuted = !std::is_sorted(z.begin(), z.end());
    if (!permuted) return;
    std::vector<std::size_t> order(z.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
    positions.resize(z.size());
    weights.resize(z.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      positions[i] = z[order[i]];
      weights[i] = w[order[i]];
    }
  }

  AtomView view(std::span<const double> z, std::span<const double> w) const {
    if (permuted) return {positions, weights};
    return {z, w};
  }
};

/// One sweep of F: out_j = y^{mu_z}(x_j) with residual tolerance `tol`,
/// warm-started from `guess`. Returns the largest residual reached.
template <Kernel K>
double sweep(std::span<const double> z, std::span<const double> x, std::span<const double> w,
             const GameConfig& cfg, const Coupling<K>& c, double tol, std::span<const double> guess,
             std::span<double> out, SortedAtoms& scratch) {
  scratch.assign(z, w);
  const AtomView m = scratch.view(z, w);
  const std::ptrdiff_t n = std::ptrdiff_t(x.size());
  std::vector<double> residual(x.size(), 0.0);
  std::vector<char> failed(x.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    try {
      const BestResponse r = solve_best_response(x[j], m, cfg, c, tol, guess[j]);
      out[j] = r.y;
      residual[j] = r.residual;
    } catch (const Error&) {
      failed[j] = 1;
    }
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (failed[j]) {
      throw Error(ErrorCode::NonConvergence, "best response failed for agent " + std::to_string(j));
    }
  }
  return residual.empty() ? 0.0 : *std::max_element(residual.begin(), residual.end());
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw Error(ErrorCode::LengthMismatch, "vectors differ in length");
  if (a == 0) throw Error(ErrorCode::LengthMismatch, "empty configuration");
}

}  // namespace detail

/// F(z)_j = y_t^{mu_z}(x_j) where mu_z = sum_k w_k delta_{z_k}.
template <Kernel K>
std::vector<double> tilde_F(std::span<const double> z, std::span<const double> x, std::span<const double> w,
                            const GameConfig& cfg, const Coupling<K>& c) {
  detail::check_lengths(z.size(), x.size(), w.size());
  std::vector<double> out(x.size());
  detail::SortedAtoms scratch;
  detail::sweep(z, x, w, cfg, c, cfg.newton_tol, x, out, scratch);
  return out;
}

struct EquilibriumResult {
  std::vector<double> positions;
  long picard_iters = 0;
  /// min(lemma_bound, posterior_bound): a rigorous bound on |z - z*|.
  double certified_error = 0.0;
  /// The inexact-Picard a priori estimate at the final k (infinite if the
  /// inner budget ever exceeded alpha^k).
  double lemma_bound = 0.0;
  /// alpha (|z_k - z_{k-1}| + eps) / (1 - alpha) + eps.
  double posterior_bound = 0.0;
  /// max_j |z_j + t D_yG(z_j, mu_z) - x_j|.
  double residual = 0.0;
};

/// max_j |z_j + t D_yG(z_j, mu_z) - x_j|.
template <Kernel K>
double fixed_point_residual(std::span<const double> z, std::span<const double> x, std::span<const double> w,
                            const GameConfig& cfg, const Coupling<K>& c) {
  detail::SortedAtoms scratch;
  scratch.assign(z, w);
  const AtomView m = scratch.view(z, w);
  double r = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) r = std::max(r, std::abs(z[j] + cfg.t * c.g_grad(z[j], m) - x[j]));
  return r;
}

/// The equilibrium configuration z = F(z) started from z_0 = x. Step k solves
/// each best response to a residual that bounds |z_{k+1} - F(z_k)| by eps_k.
/// Iteration stops once a rigorous error bound and the residual both reach picard_tol.
template <Kernel K>
EquilibriumResult tilde_E(std::span<const double> x, std::span<const double> w, const GameConfig& cfg,
                          const Coupling<K>& c) {
  detail::check_lengths(x.size(), w.size(), w.size());
  const std::size_t n = x.size();
  const double alpha = cfg.alpha;
  const double sqrt_n = std::sqrt(double(n));
  // |y - y*| <= |f(y)| / (1 - t lambda1) since f' >= 1 - t lambda1.
  const double strong = 1.0 - cfg.t * cfg.lambda1;

  std::vector<double> z(x.begin(), x.end());
  std::vector<double> next(n);
  detail::SortedAtoms scratch;

  EquilibriumResult res;
  double first_step = 0.0;
  double prev_step = std::numeric_limits<double>::infinity();
  bool lemma_valid = true;
  double alpha_k = 1.0;

  for (long k = 0; k < cfg.max_picard_iters; ++k) {
    double eps = alpha_k;
    if (cfg.inner == InnerTolerance::Adaptive && k > 0) eps = std::min(eps, 0.1 * prev_step);
    const double tol = std::max(strong * eps / sqrt_n, cfg.newton_tol);

    const double max_residual = detail::sweep<K>(z, x, w, cfg, c, tol, z, next, scratch);
    // Achieved inner error |z_{k+1} - F(z_k)|.
    const double eps_used = max_residual * sqrt_n / strong;
    if (eps_used > alpha_k) lemma_valid = false;
    const double step = detail::distance(next, z);
    if (k == 0) first_step = step;
    z.swap(next);
    prev_step = step;
    alpha_k *= alpha;

    const long iters = k + 1;
    res.lemma_bound = lemma_valid ? error_bound(iters, alpha, first_step) : std::numeric_limits<double>::infinity();
    res.posterior_bound = alpha * (step + eps_used) / (1.0 - alpha) + eps_used;
    res.certified_error = std::min(res.lemma_bound, res.posterior_bound);
    if (res.certified_error <= cfg.picard_tol) {
      res.residual = fixed_point_residual<K>(z, x, w, cfg, c);
      if (res.residual <= cfg.picard_tol) {
        res.picard_iters = iters;
        res.positions = std::move(z);
        return res;
      }
    }
  }
  throw Error(ErrorCode::NonConvergence,
              "Picard iteration did not certify picard_tol within " + std::to_string(cfg.max_picard_iters) + " steps");
}

template <Kernel K>
EquilibriumResult tilde_E(const EmpiricalMeasure& m, const GameConfig& cfg, const Coupling<K>& c) {
  return tilde_E<K>(m.positions(), m.weights(), cfg, c);
}

}  // namespace mfcluster
