#pragma once

// Weighted empirical measures on the real line and the 1-D Wasserstein-1
// distance between them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "mfcluster/error.hpp"

namespace mfcluster {

/// Non-owning view of atoms sorted by position. Weights need not sum to one.
struct AtomView {
  std::span<const double> positions;
  std::span<const double> weights;

  std::size_t size() const noexcept { return positions.size(); }
};

/// A probability measure sum_j w_j delta_{x_j} stored in canonical form:
/// positions ascending, strictly positive weights summing to one.
class EmpiricalMeasure {
 public:
  static constexpr double kRenormalizeTolerance = 1e-9;

  /// Validates and canonicalizes. Zero-weight atoms are dropped; a weight sum
  /// within 1e-9 of one is renormalized, anything further off is rejected.
  static EmpiricalMeasure from_atoms(std::vector<double> positions, std::vector<double> weights) {
    if (positions.size() != weights.size()) {
      throw Error(ErrorCode::LengthMismatch, "positions and weights differ in length");
    }
    if (positions.empty()) {
      throw Error(ErrorCode::LengthMismatch, "a measure needs at least one atom");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0)) {
        throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(i) + " is negative");
      }
      if (!std::isfinite(positions[i])) {
        throw Error(ErrorCode::InvalidArgument, "position " + std::to_string(i) + " is not finite");
      }
      sum += weights[i];
    }
    if (!(std::abs(sum - 1.0) <= kRenormalizeTolerance)) {
      throw Error(ErrorCode::WeightSumOutOfTolerance,
                  "weights sum to " + std::to_string(sum) + ", expected 1");
    }

    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });

    EmpiricalMeasure m;
    m.positions_.reserve(order.size());
    m.weights_.reserve(order.size());
    for (std::size_t i : order) {
      if (weights[i] > 0.0) {
        m.positions_.push_back(positions[i]);
        m.weights_.push_back(weights[i] / sum);
      }
    }
    return m;
  }

  /// Equal weights 1/n.
  static EmpiricalMeasure uniform(std::vector<double> positions) {
    const std::size_t n = positions.size();
    return from_atoms(std::move(positions), std::vector<double>(n, n ? 1.0 / double(n) : 0.0));
  }

  static EmpiricalMeasure dirac(double x) { return from_atoms({x}, {1.0}); }

  const std::vector<double>& positions() const noexcept { return positions_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return positions_.size(); }

  AtomView view() const noexcept { return {positions_, weights_}; }

  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * positions_[i];
    return s;
  }

  EmpiricalMeasure translated(double c) const {
    EmpiricalMeasure m = *this;
    for (double& x : m.positions_) x += c;
    return m;
  }

 private:
  EmpiricalMeasure() = default;

  std::vector<double> positions_;
  std::vector<double> weights_;
};

/// Exact W1 on the line through the quantile coupling: walks both CDFs in
/// lockstep and transports the overlapping mass of each pair of atoms.
inline double w1_distance(AtomView a, AtomView b) {
  std::size_t i = 0, j = 0;
  double ra = a.size() ? a.weights[0] : 0.0;
  double rb = b.size() ? b.weights[0] : 0.0;
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double mass = std::min(ra, rb);
    total += mass * std::abs(a.positions[i] - b.positions[j]);
    ra -= mass;
    rb -= mass;
    // Whichever side ran out advances; ties advance both.
    if (ra <= rb) {
      if (++i < a.size()) ra = a.weights[i];
      if (rb <= 0.0 && ++j < b.size()) rb = b.weights[j];
    } else {
      if (++j < b.size()) rb = b.weights[j];
    }
  }
  return total;
}

inline double w1_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return w1_distance(a.view(), b.view());
}

struct Interval {
  double lo;
  double hi;

  double midpoint() const noexcept { return 0.5 * (lo + hi); }
  double half_width() const noexcept { return 0.5 * (hi - lo); }
};

/// n evenly spaced points on [lo, hi], endpoints included. The points are
/// generated from the midpoint outward so an interval symmetric about zero
/// yields an exactly mirror-symmetric grid. A single point sits at the midpoint.
inline std::vector<double> grid(std::size_t n, Interval interval) {
  if (n == 0) throw Error(ErrorCode::EmptyGrid, "grid needs at least one point");
  if (!(interval.lo <= interval.hi)) throw Error(ErrorCode::InvalidArgument, "grid interval is reversed");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = interval.midpoint();
    return out;
  }
  const double mid = interval.midpoint();
  const double half = interval.half_width();
  const double denom = double(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double k = 2.0 * double(i) - denom;
    out[i] = mid + half * k / denom;
  }
  out.front() = interval.lo;
  out.back() = interval.hi;
  return out;
}

enum class DistributionTag { Uniform, SemiCircle, Triangular, InvertedSemiCircle };

struct DistributionKind {
  DistributionTag tag = DistributionTag::Uniform;
  Interval support{-4.995, 4.995};
};

inline std::string_view to_string(DistributionTag tag) {
  switch (tag) {
    case DistributionTag::Uniform: return "uniform";
    case DistributionTag::SemiCircle: return "semicircle";
    case DistributionTag::Triangular: return "triangular";
    case DistributionTag::InvertedSemiCircle: return "inverted-semicircle";
  }
  return "unknown";
}

/// Unnormalized density of the kind at s = (x - midpoint) / half_width, s in [-1, 1].
inline double shape_density(DistributionTag tag, double s) {
  const double a = std::min(std::abs(s), 1.0);
  switch (tag) {
    case DistributionTag::Uniform:
      return 1.0;
    case DistributionTag::SemiCircle:
      return std::sqrt(std::max(0.0, 1.0 - a * a));
    case DistributionTag::Triangular:
      return 1.0 - a;
    case DistributionTag::InvertedSemiCircle: {
      // Two concave-up quarter circles meeting in a cusp at the midpoint:
      // peak 1 at the centre, zero with zero slope at the ends.
      const double c = 1.0 - a;
      return 1.0 - std::sqrt(std::max(0.0, 1.0 - c * c));
    }
  }
  return 0.0;
}

/// Atoms on grid(n, support) weighted by the kind's density at each point.
inline EmpiricalMeasure initial_distribution(const DistributionKind& kind, std::size_t n) {
  if (!(kind.support.lo < kind.support.hi)) {
    throw Error(ErrorCode::InvalidArgument, "distribution support must satisfy a < b");
  }
  std::vector<double> xs = grid(n, kind.support);
  const double mid = kind.support.midpoint();
  const double half = kind.support.half_width();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = shape_density(kind.tag, (xs[i] - mid) / half);
  // Sum in mirrored pairs so symmetric grids give exactly symmetric weights.
  double total = 0.0;
  for (std::size_t i = 0, j = n - 1; i <= j && j < n; ++i, --j) {
    total += (i == j) ? w[i] : (w[i] + w[j]);
    if (j == 0) break;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::WeightSumOutOfTolerance, "distribution has no mass on the grid");
  }
  for (double& v : w) v /= total;
  return EmpiricalMeasure::from_atoms(std::move(xs), std::move(w));
}

}  // namespace mfcluster
