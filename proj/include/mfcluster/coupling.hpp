#pragma once

// Convolution couplings G(y, m) = sum_k w_k phi(y - z_k) with an even,
// non-positive, compactly supported kernel phi.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <utility>

#include "mfcluster/error.hpp"
#include "mfcluster/measures.hpp"

namespace mfcluster {

/// phi and its first two derivatives at one point.
struct KernelJet {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

template <class K>
concept Kernel = requires(const K& k, double x) {
  { k.radius() } -> std::convertible_to<double>;
  { k.value(x) } -> std::convertible_to<double>;
  { k.jet(x) } -> std::same_as<KernelJet>;
};

/// phi(x) = -amplitude * exp(-1 / (1 - x^2)) on (-1, 1), zero elsewhere.
struct BumpKernel {
  double amplitude = 1.0;

  static constexpr double radius() noexcept { return 1.0; }

  double value(double x) const noexcept {
    const double u = 1.0 - x * x;
    if (!(u > 0.0)) return 0.0;
    return -amplitude * std::exp(-1.0 / u);
  }

  KernelJet jet(double x) const noexcept {
    const double u = 1.0 - x * x;
    if (!(u > 0.0)) return {};
    const double f = std::exp(-1.0 / u);
    const double inv_u = 1.0 / u;
    const double inv_u2 = inv_u * inv_u;
    const double x2 = x * x;
    KernelJet j;
    j.value = -amplitude * f;
    j.slope = 2.0 * amplitude * x * f * inv_u2;
    j.curvature = amplitude * f * inv_u2 * (2.0 - 4.0 * x2 * inv_u2 + 8.0 * x2 * inv_u);
    return j;
  }
};

/// A kernel together with the constants the well-posedness theory needs:
/// lambda1 (semiconvexity: phi'' + lambda1 >= 0), lipschitz (sup |phi''|,
/// the W1-Lipschitz constant of D_y G) and sup_slope (sup |phi'|).
template <Kernel K>
class Coupling {
 public:
  static constexpr std::size_t kDefaultScanPoints = 200001;
  static constexpr double kDefaultMargin = 1e-6;

  explicit Coupling(K kernel, std::size_t scan_points = kDefaultScanPoints,
                    double margin = kDefaultMargin)
      : kernel_(std::move(kernel)), radius_(kernel_.radius()) {
    if (!(radius_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel radius must be positive");
    if (scan_points < 3) throw Error(ErrorCode::InvalidArgument, "too few scan points");
    double min_curv = 0.0, max_abs_curv = 0.0, max_abs_slope = 0.0;
    for (std::size_t i = 0; i < scan_points; ++i) {
      const double x = -radius_ + 2.0 * radius_ * double(i) / double(scan_points - 1);
      const KernelJet j = kernel_.jet(x);
      min_curv = std::min(min_curv, j.curvature);
      max_abs_curv = std::max(max_abs_curv, std::abs(j.curvature));
      max_abs_slope = std::max(max_abs_slope, std::abs(j.slope));
    }
    lambda1_ = -min_curv * (1.0 + margin);
    lipschitz_ = max_abs_curv * (1.0 + margin);
    sup_slope_ = max_abs_slope * (1.0 + margin);
  }

  const K& kernel() const noexcept { return kernel_; }
  double radius() const noexcept { return radius_; }
  double lambda1() const noexcept { return lambda1_; }
  double lipschitz() const noexcept { return lipschitz_; }
  double sup_slope() const noexcept { return sup_slope_; }

  double phi(double x) const { return kernel_.value(x); }
  double phi_prime(double x) const { return kernel_.jet(x).slope; }
  double phi_second(double x) const { return kernel_.jet(x).curvature; }

  /// Index range of atoms within the closed support window around y.
  std::pair<std::size_t, std::size_t> window(double y, AtomView m) const {
    const auto first = std::lower_bound(m.positions.begin(), m.positions.end(), y - radius_);
    const auto last = std::upper_bound(first, m.positions.end(), y + radius_);
    return {std::size_t(first - m.positions.begin()), std::size_t(last - m.positions.begin())};
  }

  /// G(y, m).
  double g_value(double y, AtomView m) const {
    const auto [lo, hi] = window(y, m);
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += m.weights[k] * kernel_.value(y - m.positions[k]);
    return s;
  }

  /// D_y G(y, m) and D_yy G(y, m) in one pass.
  std::pair<double, double> g_grad_hess(double y, AtomView m) const {
    const auto [lo, hi] = window(y, m);
    double g1 = 0.0, g2 = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      const KernelJet j = kernel_.jet(y - m.positions[k]);
      g1 += m.weights[k] * j.slope;
      g2 += m.weights[k] * j.curvature;
    }
    return {g1, g2};
  }

  double g_grad(double y, AtomView m) const { return g_grad_hess(y, m).first; }
  double g_hess(double y, AtomView m) const { return g_grad_hess(y, m).second; }

  double g_value(double y, const EmpiricalMeasure& m) const { return g_value(y, m.view()); }
  double g_grad(double y, const EmpiricalMeasure& m) const { return g_grad(y, m.view()); }
  double g_hess(double y, const EmpiricalMeasure& m) const { return g_hess(y, m.view()); }

 private:
  K kernel_;
  double radius_;
  double lambda1_ = 0.0;
  double lipschitz_ = 0.0;
  double sup_slope_ = 0.0;
};

using BumpCoupling = Coupling<BumpKernel>;

inline BumpCoupling bump_coupling() { return BumpCoupling(BumpKernel{}); }

/// Largest admissible horizon scaled by safety: safety / (lambda1 + L1).
inline double t_star(double lambda1, double lipschitz, double safety) {
  if (!(safety > 0.0 && safety < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "safety factor must lie in (0, 1)");
  }
  if (!(lambda1 + lipschitz > 0.0)) throw Error(ErrorCode::InvalidArgument, "degenerate coupling constants");
  return safety / (lambda1 + lipschitz);
}

template <Kernel K>
double t_star(const Coupling<K>& c, double safety) {
  return t_star(c.lambda1(), c.lipschitz(), safety);
}

}  // namespace mfcluster
