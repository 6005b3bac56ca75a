#pragma once

// Independent oracles and random instance generators shared by the unit
// tests and the acceptance binary. Nothing here calls the library's solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Real = long double;

/// Bump kernel from its closed form, in extended precision.
inline Real bump(Real x) {
  if (!(std::fabs(x) < 1.0L)) return 0.0L;
  return -std::exp(-1.0L / (1.0L - x * x));
}

/// J_t(x, y, m) = |x - y|^2 / (2t) + sum_k w_k phi(y - z_k), extended precision.
inline Real cost(Real x, Real y, Real t, const std::vector<double>& z, const std::vector<double>& w) {
  Real g = 0.0L;
  for (std::size_t k = 0; k < z.size(); ++k) g += Real(w[k]) * bump(y - Real(z[k]));
  return (x - y) * (x - y) / (2.0L * t) + g;
}

/// Golden-section minimization of J_t(x, ., m) on [lo, hi] (J is strictly
/// convex there for t below the uniqueness bound).
inline double golden_section(double x, double t, const std::vector<double>& z, const std::vector<double>& w,
                             double lo, double hi) {
  const Real inv_phi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  Real a = lo, b = hi;
  Real c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  Real fc = cost(x, c, t, z, w), fd = cost(x, d, t, z, w);
  for (int it = 0; it < 200 && b - a > 1e-15L; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = cost(x, c, t, z, w);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = cost(x, d, t, z, w);
    }
  }
  return double((a + b) / 2.0L);
}

/// Central difference of f at x with step h.
template <class F>
double central_difference(F f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// W1 between two uniform-weight point sets of equal size by enumerating all
/// assignments (the optimal plan is a permutation).
inline double w1_bruteforce(const std::vector<double>& a, std::vector<double> b) {
  std::sort(b.begin(), b.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    best = std::min(best, s / double(a.size()));
  } while (std::next_permutation(b.begin(), b.end()));
  return best;
}

/// W1 as the integral of |F_a - F_b| over the line (the CDF form), evaluated
/// exactly between consecutive breakpoints.
inline double w1_cdf(const std::vector<double>& xa, const std::vector<double>& wa, const std::vector<double>& xb,
                     const std::vector<double>& wb) {
  std::vector<double> pts = xa;
  pts.insert(pts.end(), xb.begin(), xb.end());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const std::vector<double>& x, const std::vector<double>& w, double s) {
    Real f = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] <= s) f += w[i];
    return f;
  };
  Real total = 0.0L;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += std::fabs(cdf(xa, wa, pts[i]) - cdf(xb, wb, pts[i])) * Real(pts[i + 1] - pts[i]);
  }
  return double(total);
}

/// Scalar root of s + (t/2) phi'(2s) = x0 on [lo, hi] by bisection, where
/// phi'(2s) is taken from the extended-precision closed form's derivative
/// via a five-point stencil. Solves the symmetric two-atom equilibrium.
inline double two_atom_half_gap(double x0, double t) {
  auto dphi = [](Real u) {
    const Real h = 1e-4L;
    return (-bump(u + 2 * h) + 8 * bump(u + h) - 8 * bump(u - h) + bump(u - 2 * h)) / (12 * h);
  };
  auto f = [&](Real s) { return s + Real(t) / 2.0L * dphi(2.0L * s) - Real(x0); };
  Real lo = 0.0L, hi = Real(x0);
  if (f(lo) > 0.0L || f(hi) < 0.0L) return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 200; ++it) {
    const Real mid = (lo + hi) / 2.0L;
    (f(mid) < 0.0L ? lo : hi) = mid;
  }
  return double((lo + hi) / 2.0L);
}

}  // namespace oracle

namespace gen {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Positive weights summing to one.
inline std::vector<double> random_weights(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = uniform(rng, 0.1, 1.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= s;
  return w;
}

struct Clustered {
  std::vector<double> x;  // sorted
  std::vector<std::size_t> sizes;
  std::vector<double> centers;
};

/// Coincident-atom clusters whose consecutive centers are `gap` apart, each
/// gap drawn from [gap_lo, gap_hi].
inline Clustered clustered(Rng& rng, std::size_t clusters, std::size_t max_size, double gap_lo, double gap_hi) {
  Clustered out;
  double c = uniform(rng, -2.0, 2.0);
  for (std::size_t m = 0; m < clusters; ++m) {
    if (m > 0) c += uniform(rng, gap_lo, gap_hi);
    const std::size_t size = uniform_int(rng, 1, max_size);
    out.sizes.push_back(size);
    out.centers.push_back(c);
    out.x.insert(out.x.end(), size, c);
  }
  return out;
}

inline std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / double(n)); }

/// Sorted random positions in [lo, hi].
inline std::vector<double> sorted_positions(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> x(n);
  for (double& v : x) v = uniform(rng, lo, hi);
  std::sort(x.begin(), x.end());
  return x;
}

}  // namespace gen
