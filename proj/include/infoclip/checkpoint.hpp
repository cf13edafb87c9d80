#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/lpam.hpp"
#include "infoclip/synth.hpp"
#include "infoclip/tensor_io.hpp"

namespace infoclip {

// Checkpoints are rank-1 binary64 tensors with a declared field order, so
// save/load round-trips bit-exactly through the tensor format.
//
//   alignment params: [d, eps, wq, wk, ln_v_gain, ln_v_bias, ln_l_gain, ln_l_bias]
//   adapters:         [d, a_v, a_l]
//
// Matrices are flattened row-major.

namespace detail {

inline std::size_t checked_dim(double v, const std::string& path) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 16384.0)
    throw FormatError(path + ": invalid dimension field " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

} // namespace detail

inline void save_lpam(const std::string& path, const LpamParams& p) {
  validate_params(p);
  std::vector<double> flat;
  flat.reserve(2 + 2 * p.d * p.d + 4 * p.d);
  flat.push_back(static_cast<double>(p.d));
  flat.push_back(p.eps);
  flat.insert(flat.end(), p.wq.data().begin(), p.wq.data().end());
  flat.insert(flat.end(), p.wk.data().begin(), p.wk.data().end());
  flat.insert(flat.end(), p.ln_v_gain.begin(), p.ln_v_gain.end());
  flat.insert(flat.end(), p.ln_v_bias.begin(), p.ln_v_bias.end());
  flat.insert(flat.end(), p.ln_l_gain.begin(), p.ln_l_gain.end());
  flat.insert(flat.end(), p.ln_l_bias.begin(), p.ln_l_bias.end());
  write_tensor(path, flat);
}

inline LpamParams load_lpam(const std::string& path) {
  const std::vector<double> flat = read_vector(path);
  if (flat.size() < 2) throw FormatError(path + ": checkpoint too short");
  const std::size_t d = detail::checked_dim(flat[0], path);
  const std::size_t expect = 2 + 2 * d * d + 4 * d;
  if (flat.size() != expect)
    throw FormatError(path + ": checkpoint has " + std::to_string(flat.size()) +
                      " values, expected " + std::to_string(expect) + " for d = " +
                      std::to_string(d));
  LpamParams p;
  p.d = d;
  p.eps = flat[1];
  std::size_t at = 2;
  auto take_matrix = [&](std::size_t n) {
    DenseMatrix m(n, n, std::vector<double>(flat.begin() + at, flat.begin() + at + n * n));
    at += n * n;
    return m;
  };
  auto take_vector = [&](std::size_t n) {
    std::vector<double> v(flat.begin() + at, flat.begin() + at + n);
    at += n;
    return v;
  };
  p.wq = take_matrix(d);
  p.wk = take_matrix(d);
  p.ln_v_gain = take_vector(d);
  p.ln_v_bias = take_vector(d);
  p.ln_l_gain = take_vector(d);
  p.ln_l_bias = take_vector(d);
  validate_params(p);
  return p;
}

inline void save_adapters(const std::string& path, const StudentAdapter& a) {
  if (a.a_v.rows() != a.a_v.cols() || !a.a_v.same_shape(a.a_l))
    throw DimensionError("save_adapters: adapters must be square and same shape");
  if (!a.a_v.all_finite() || !a.a_l.all_finite())
    throw InputError("save_adapters: non-finite adapter entry");
  const std::size_t d = a.a_v.rows();
  std::vector<double> flat;
  flat.reserve(1 + 2 * d * d);
  flat.push_back(static_cast<double>(d));
  flat.insert(flat.end(), a.a_v.data().begin(), a.a_v.data().end());
  flat.insert(flat.end(), a.a_l.data().begin(), a.a_l.data().end());
  write_tensor(path, flat);
}

inline StudentAdapter load_adapters(const std::string& path) {
  const std::vector<double> flat = read_vector(path);
  if (flat.empty()) throw FormatError(path + ": checkpoint too short");
  const std::size_t d = detail::checked_dim(flat[0], path);
  if (flat.size() != 1 + 2 * d * d)
    throw FormatError(path + ": checkpoint has " + std::to_string(flat.size()) +
                      " values, expected " + std::to_string(1 + 2 * d * d) + " for d = " +
                      std::to_string(d));
  StudentAdapter a{
      DenseMatrix(d, d, std::vector<double>(flat.begin() + 1, flat.begin() + 1 + d * d)),
      DenseMatrix(d, d, std::vector<double>(flat.begin() + 1 + d * d, flat.end()))};
  return a;
}

} // namespace infoclip
