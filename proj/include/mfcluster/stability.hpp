#pragma once

// Linearization of the equilibrium map at a configuration. With
// g(y, z) = sum_k w_k phi(y - z_k), implicit differentiation of
// y_j + t D_y g(y_j, y) = x_j gives A DE = I where A = I + (t/n) B and
//
//   B_jj = sum_{k != j} n w_k phi''(y_j - y_k),   B_jk = -n w_k phi''(y_j - y_k).
//
// B is similar to the symmetric D^{1/2} B D^{-1/2}, D = diag(n w), so the
// spectrum of DE = A^{-1} follows from a symmetric eigensolve.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfcluster/coupling.hpp"
#include "mfcluster/dynamics.hpp"
#include "mfcluster/equilibrium.hpp"
#include "mfcluster/error.hpp"

namespace mfcluster {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n - 1 on the diagonal, -1 elsewhere.
inline Matrix c_matrix(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "c_matrix needs n >= 1");
  const Eigen::Index m = Eigen::Index(n);
  Matrix c = Matrix::Constant(m, m, -1.0);
  c.diagonal().setConstant(double(n) - 1.0);
  return c;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
/// Sweeps until the off-diagonal Frobenius norm is below `off_tol` (relative
/// to the matrix norm when that exceeds one).
inline std::vector<double> spectrum(const Matrix& input, double sym_tol = 1e-10, double off_tol = 1e-12) {
  if (input.rows() != input.cols()) throw Error(ErrorCode::NotSymmetric, "matrix is not square");
  const Eigen::Index n = input.rows();
  const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
  if ((input - input.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) {
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric to " + std::to_string(sym_tol));
  }
  Matrix a = 0.5 * (input + input.transpose());
  const double target = off_tol * std::max(1.0, a.norm());

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > target; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  if (off_norm() > target) throw Error(ErrorCode::NonConvergence, "Jacobi sweeps did not converge");

  std::vector<double> eig(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) eig[std::size_t(i)] = a(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

/// The interaction matrix B of the linearized equilibrium condition.
template <Kernel K>
Matrix assemble_B(std::span<const double> y, std::span<const double> w, const Coupling<K>& c) {
  if (y.size() != w.size()) throw Error(ErrorCode::LengthMismatch, "positions and weights differ in length");
  const Eigen::Index n = Eigen::Index(y.size());
  const double scale = double(n);
  Matrix b = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == j) continue;
      const double h = c.phi_second(y[std::size_t(j)] - y[std::size_t(k)]);
      const double v = scale * w[std::size_t(k)] * h;
      b(j, k) = -v;
      diag += v;
    }
    b(j, j) = diag;
  }
  return b;
}

template <Kernel K>
Matrix assemble_A(std::span<const double> y, std::span<const double> w, const GameConfig& cfg,
                  const Coupling<K>& c) {
  const Eigen::Index n = Eigen::Index(y.size());
  return Matrix::Identity(n, n) + (cfg.t / double(n)) * assemble_B(y, w, c);
}

/// DE = A^{-1} by a dense LU solve.
template <Kernel K>
Matrix assemble_dE(std::span<const double> y, std::span<const double> w, const GameConfig& cfg,
                   const Coupling<K>& c) {
  const Matrix a = assemble_A(y, w, cfg, c);
  const Eigen::PartialPivLU<Matrix> lu(a);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorCode::SingularA, "A is numerically singular");
  return lu.solve(Matrix::Identity(a.rows(), a.cols()));
}

/// D^{1/2} B D^{-1/2} with D = diag(n w).
inline Matrix symmetrize_B(const Matrix& b, std::span<const double> w) {
  const Eigen::Index n = b.rows();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = std::sqrt(double(n) * w[std::size_t(i)]);
  Matrix s = d.asDiagonal() * b * d.cwiseInverse().asDiagonal();
  return 0.5 * (s + s.transpose());
}

enum class Verdict { AsymptoticallyStable, Marginal, Unstable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::AsymptoticallyStable: return "AsymptoticallyStable";
    case Verdict::Marginal: return "Marginal";
    case Verdict::Unstable: return "Unstable";
  }
  return "Unknown";
}

struct StabilityReport {
  Matrix B;
  Matrix A;
  std::vector<double> dE_eigenvalues;  // descending
  std::vector<double> restricted_eigenvalues;
  double restricted_spectral_radius = 0.0;
  std::vector<std::size_t> cluster_sizes;
  bool spread_out = false;
  Verdict verdict = Verdict::Marginal;
};

inline constexpr double kSpreadMargin = 1e-9;
inline constexpr double kUnitMargin = 1e-9;

/// Linear stability of the iterated game at a fixed point. Each cluster is
/// an invariant block of B; the block's all-ones direction (eigenvalue 1 of
/// DE, the translation mode) is removed before taking the spectral radius.
template <Kernel K>
StabilityReport classify(std::span<const double> x, std::span<const double> w, const GameConfig& cfg,
                         const Coupling<K>& c, double tol = 1e-9) {
  if (x.size() != w.size()) throw Error(ErrorCode::LengthMismatch, "positions and weights differ in length");
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "empty configuration");
  if (!std::is_sorted(x.begin(), x.end())) throw Error(ErrorCode::InvalidArgument, "positions must be sorted");
  if (!is_fixed_point<K>(x, c, tol)) throw Error(ErrorCode::NotAFixedPoint, "configuration is not a fixed point");

  const std::size_t n = x.size();
  const double h = cfg.t / double(n);
  StabilityReport rep;
  rep.B = assemble_B(x, w, c);
  rep.A = Matrix::Identity(Eigen::Index(n), Eigen::Index(n)) + h * rep.B;
  const Matrix s = symmetrize_B(rep.B, w);

  rep.spread_out = true;
  double prev_last = 0.0;
  std::size_t first = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && x[i] - x[i - 1] <= tol) continue;
    if (first > 0 && !(x[first] - prev_last > c.radius() + kSpreadMargin)) rep.spread_out = false;
    prev_last = x[i - 1];
    const Eigen::Index b0 = Eigen::Index(first);
    const Eigen::Index m = Eigen::Index(i - first);
    rep.cluster_sizes.push_back(i - first);

    const Matrix block = s.block(b0, b0, m, m);
    for (double beta : spectrum(block)) rep.dE_eigenvalues.push_back(1.0 / (1.0 + h * beta));

    if (m > 1) {
      // Householder reflector sending the block's translation mode to e_1;
      // its remaining columns span the orthogonal complement.
      Vector u(m);
      for (Eigen::Index k = 0; k < m; ++k) u(k) = std::sqrt(w[first + std::size_t(k)]);
      u.normalize();
      Vector v = u;
      v(0) += (u(0) >= 0.0 ? 1.0 : -1.0);
      const Matrix hh = Matrix::Identity(m, m) - 2.0 * v * v.transpose() / v.squaredNorm();
      const Matrix q = hh.rightCols(m - 1);
      const Matrix restricted = q.transpose() * block * q;
      for (double beta : spectrum(0.5 * (restricted + restricted.transpose()))) {
        rep.restricted_eigenvalues.push_back(1.0 / (1.0 + h * beta));
      }
    }
    first = i;
  }
  std::sort(rep.dE_eigenvalues.begin(), rep.dE_eigenvalues.end(), std::greater<>());
  std::sort(rep.restricted_eigenvalues.begin(), rep.restricted_eigenvalues.end(), std::greater<>());
  for (double e : rep.restricted_eigenvalues) {
    rep.restricted_spectral_radius = std::max(rep.restricted_spectral_radius, std::abs(e));
  }

  if (rep.restricted_spectral_radius > 1.0 + kUnitMargin) {
    rep.verdict = Verdict::Unstable;
  } else if (rep.spread_out && !rep.restricted_eigenvalues.empty() &&
             rep.restricted_spectral_radius < 1.0 - kUnitMargin) {
    rep.verdict = Verdict::AsymptoticallyStable;
  } else {
    rep.verdict = Verdict::Marginal;
  }
  return rep;
}

}  // namespace mfcluster
