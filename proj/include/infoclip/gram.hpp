#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "infoclip/errors.hpp"
#include "infoclip/matrix.hpp"

namespace infoclip {

/// A batch of n >= 2 embeddings, one per row, with finite entries.
class FeatureBatch {
public:
  explicit FeatureBatch(DenseMatrix values) : values_(std::move(values)) {
    if (values_.rows() < 2)
      throw InputError("FeatureBatch: need at least 2 samples, got " +
                       std::to_string(values_.rows()));
    if (!values_.all_finite()) throw InputError("FeatureBatch: non-finite entry");
  }

  std::size_t samples() const { return values_.rows(); }
  std::size_t dim() const { return values_.cols(); }
  const DenseMatrix& values() const { return values_; }

private:
  DenseMatrix values_;
};

enum class Kernel {
  PolynomialDegree1, // plain inner products x^T y
};

enum class NormalizationMode {
  Trace,    // X X^T / tr(X X^T)
  Diagonal, // (1/n) K_ij / sqrt(K_ii K_jj)
};

/// Symmetric PSD kernel matrix over a feature batch. Trace-mode Grams have
/// unit trace; diagonal-mode Grams have every diagonal entry equal to 1/n
/// (and therefore unit trace as well). PSD-ness follows from the X X^T
/// construction and is exercised by the property tests rather than checked
/// on every build.
class GramMatrix {
public:
  static GramMatrix from_matrix(DenseMatrix m, NormalizationMode mode) {
    return GramMatrix(std::move(m), mode);
  }

  std::size_t dim() const { return matrix_.rows(); }
  const DenseMatrix& matrix() const { return matrix_; }
  NormalizationMode mode() const { return mode_; }

private:
  GramMatrix(DenseMatrix m, NormalizationMode mode) : matrix_(std::move(m)), mode_(mode) {
    require_square(matrix_, "GramMatrix");
    const std::size_t n = matrix_.rows();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(matrix_(i, j) - matrix_(j, i)) > 1e-10)
          throw InputError("GramMatrix: asymmetry beyond 1e-10 at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
    if (mode_ == NormalizationMode::Trace) {
      if (std::abs(trace(matrix_) - 1.0) > 1e-10)
        throw InputError("GramMatrix: trace " + std::to_string(trace(matrix_)) +
                         " deviates from 1 beyond 1e-10");
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(matrix_(i, i) - 1.0 / static_cast<double>(n)) > 1e-10)
          throw InputError("GramMatrix: diagonal entry " + std::to_string(i) +
                           " deviates from 1/n beyond 1e-10");
    }
  }

  DenseMatrix matrix_;
  NormalizationMode mode_;
};

/// Build the normalized kernel matrix of a feature batch with the degree-1
/// polynomial kernel. Trace mode divides X X^T by its trace; diagonal mode
/// scales each entry by the diagonal, K_ij / (n sqrt(K_ii K_jj)).
inline GramMatrix gram_from_features(const FeatureBatch& x, Kernel kernel,
                                     NormalizationMode norm) {
  if (kernel != Kernel::PolynomialDegree1)
    throw InputError("gram_from_features: unsupported kernel");
  const DenseMatrix& v = x.values();
  DenseMatrix k = matmul_nt(v, v);
  const std::size_t n = k.rows();

  if (norm == NormalizationMode::Trace) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += k(i, i);
    if (!(t > 0.0))
      throw DegenerateError("gram_from_features: tr(X X^T) = " + std::to_string(t) +
                            " is not positive");
    for (double& e : k.data()) e /= t;
    return GramMatrix::from_matrix(std::move(k), NormalizationMode::Trace);
  }

  for (std::size_t i = 0; i < n; ++i)
    if (!(k(i, i) > 0.0))
      throw DegenerateError("gram_from_features: zero row " + std::to_string(i) +
                            " in diagonal mode");
  DenseMatrix a(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = inv_n;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double e = inv_n * k(i, j) / std::sqrt(k(i, i) * k(j, j));
      a(i, j) = e;
      a(j, i) = e;
    }
  }
  return GramMatrix::from_matrix(std::move(a), NormalizationMode::Diagonal);
}

} // namespace infoclip
