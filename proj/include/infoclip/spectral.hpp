#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/matrix.hpp"

namespace infoclip {

/// Result of a symmetric eigendecomposition: eigenvalues sorted
/// non-increasing, plus the number of Jacobi sweeps spent.
struct SpectralResult {
  std::vector<double> eigenvalues;
  std::size_t iterations = 0;
};

namespace detail {

constexpr double kSymmetryTol = 1e-10;
constexpr std::size_t kMaxJacobiSweeps = 100;

inline double off_diagonal_norm(const DenseMatrix& a) {
  double s = 0.0;
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
  return std::sqrt(s);
}

} // namespace detail

/// All eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
///
/// Convergence is declared when the off-diagonal Frobenius norm drops below
/// `tol`; a non-positive `tol` selects the default 1e-12 * ||a||_F. The input
/// must be symmetric within 1e-10 elementwise; the residual asymmetry is
/// folded away by symmetrizing before iterating.
inline SpectralResult sym_eigenvalues(const DenseMatrix& a, double tol = -1.0) {
  require_square(a, "sym_eigenvalues");
  const std::size_t n = a.rows();

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > detail::kSymmetryTol)
        throw InputError("sym_eigenvalues: asymmetry " + std::to_string(std::abs(a(i, j) - a(j, i))) +
                         " at (" + std::to_string(i) + "," + std::to_string(j) +
                         ") exceeds tolerance 1e-10");

  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (a(i, j) + a(j, i));

  if (tol <= 0.0) tol = 1e-12 * std::sqrt(frobenius_sq(m));

  std::size_t sweeps = 0;
  while (detail::off_diagonal_norm(m) > tol) {
    if (sweeps >= detail::kMaxJacobiSweeps)
      throw ConvergenceError("sym_eigenvalues: off-diagonal norm " +
                             std::to_string(detail::off_diagonal_norm(m)) + " above tolerance " +
                             std::to_string(tol) + " after " +
                             std::to_string(detail::kMaxJacobiSweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = m(p, p);
        const double aqq = m(q, q);
        m(p, p) = app - t * apq;
        m(q, q) = aqq + t * apq;
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double aip = m(i, p);
          const double aiq = m(i, q);
          m(i, p) = c * aip - s * aiq;
          m(p, i) = m(i, p);
          m(i, q) = s * aip + c * aiq;
          m(q, i) = m(i, q);
        }
      }
    }
    ++sweeps;
  }

  SpectralResult result;
  result.iterations = sweeps;
  result.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.eigenvalues[i] = m(i, i);
  std::sort(result.eigenvalues.begin(), result.eigenvalues.end(), std::greater<double>());
  return result;
}

} // namespace infoclip
