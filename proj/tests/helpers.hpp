#pragma once

// Shared fixtures for the test suite: seeded matrix generators, exact and
// tolerant comparisons, scratch file paths under the working directory.

#include <infoclip/infoclip.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace testutil {

inline infoclip::DenseMatrix random_matrix(std::uint64_t seed, std::size_t rows,
                                           std::size_t cols, double scale = 1.0) {
  infoclip::Rng rng(seed);
  infoclip::DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

inline infoclip::FeatureBatch random_batch(std::uint64_t seed, std::size_t rows,
                                           std::size_t cols, double scale = 1.0) {
  return infoclip::FeatureBatch(random_matrix(seed, rows, cols, scale));
}

inline infoclip::DenseMatrix identity(std::size_t n) {
  return infoclip::DenseMatrix::identity(n);
}

// A batch of n mutually orthonormal rows (the first n canonical basis vectors).
inline infoclip::FeatureBatch orthonormal_batch(std::size_t n) {
  return infoclip::FeatureBatch(infoclip::DenseMatrix::identity(n));
}

// A batch whose rows are all the same unit vector.
inline infoclip::FeatureBatch constant_batch(std::size_t n, std::size_t dim = 3) {
  infoclip::DenseMatrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) m(i, 0) = 1.0;
  return infoclip::FeatureBatch(m);
}

inline bool bitwise_equal(const infoclip::DenseMatrix& a, const infoclip::DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

inline bool all_zero(const infoclip::DenseMatrix& a) {
  for (double v : a.data())
    if (v != 0.0) return false;
  return true;
}

// Scratch paths live under the test working directory; each call gets a
// distinct name so cases cannot collide.
inline std::filesystem::path scratch_path(const std::string& stem) {
  static int counter = 0;
  return std::filesystem::path("scratch_" + stem + "_" + std::to_string(counter++));
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline bool files_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
  return slurp(a) == slurp(b);
}

} // namespace testutil
