#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infoclip/errors.hpp"

namespace infoclip {

/// Dense real matrix, row-major, double precision. The workhorse type for
/// every Gram matrix, feature batch and parameter block in the library.
class DenseMatrix {
public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    check_dims(rows, cols);
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_dims(rows, cols);
    if (data_.size() != rows_ * cols_)
      throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    if (rows.size() == 0) throw DimensionError("DenseMatrix: empty row list");
    const std::size_t cols = rows.begin()->size();
    DenseMatrix m(rows.size(), cols);
    std::size_t i = 0;
    for (const auto& r : rows) {
      if (r.size() != cols) throw DimensionError("DenseMatrix: ragged row list");
      std::size_t j = 0;
      for (double v : r) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

private:
  static void check_dims(std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1)
      throw DimensionError("DenseMatrix: rows and cols must be >= 1");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

inline void require_square(const DenseMatrix& a, const char* op) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(op) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
}

/// Elementwise product.
inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out(a.rows(), a.cols());
  const auto& ad = a.data();
  const auto& bd = b.data();
  auto& od = out.data();
  for (std::size_t k = 0; k < ad.size(); ++k) od[k] = ad[k] * bd[k];
  return out;
}

/// Sum of squared entries. For symmetric PSD input this equals the sum of
/// squared eigenvalues.
inline double frobenius_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

inline double trace(const DenseMatrix& a) {
  require_square(a, "trace");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

/// Divide a square matrix by its trace so the result has unit trace.
inline DenseMatrix trace_normalize(const DenseMatrix& k) {
  require_square(k, "trace_normalize");
  const double t = trace(k);
  if (!(t > 0.0))
    throw DegenerateError("trace_normalize: trace " + std::to_string(t) + " is not positive");
  DenseMatrix out(k.rows(), k.cols());
  for (std::size_t i = 0; i < k.data().size(); ++i) out.data()[i] = k.data()[i] / t;
  return out;
}

/// a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()));
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

/// a * b^T
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols())
    throw DimensionError("matmul_nt: inner dimensions " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()));
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
  return out;
}

/// a^T * b
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows())
    throw DimensionError("matmul_tn: inner dimensions " + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()));
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline DenseMatrix scaled(const DenseMatrix& a, double c) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.data().size(); ++k) out.data()[k] = c * a.data()[k];
  return out;
}

/// a += c * b
inline void add_scaled(DenseMatrix& a, double c, const DenseMatrix& b) {
  require_same_shape(a, b, "add_scaled");
  for (std::size_t k = 0; k < a.data().size(); ++k) a.data()[k] += c * b.data()[k];
}

/// Frobenius inner product <a, b>.
inline double inner(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

/// Scale every row to unit L2 norm. Rows of exactly zero norm cannot be
/// normalized and are rejected.
inline DenseMatrix row_l2_normalize(const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double nrm2 = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) nrm2 += a(i, j) * a(i, j);
    const double nrm = std::sqrt(nrm2);
    if (!(nrm > 0.0))
      throw DegenerateError("row_l2_normalize: row " + std::to_string(i) + " has zero norm");
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) / nrm;
  }
  return out;
}

} // namespace infoclip
