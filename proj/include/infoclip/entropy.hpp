#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/spectral.hpp"

namespace infoclip {

enum class EntropyMethod {
  Eigen,    // 1/(1-alpha) * log2 sum_i lambda_i^alpha
  Frobenius // alpha = 2 only: -log2 ||G||_F^2
};

struct EntropySpec {
  double alpha = 2.0;
  EntropyMethod method = EntropyMethod::Frobenius;
};

/// log2 via ln / ln 2, the same form the analytic loss gradients assume.
inline double log2_of(double x) { return std::log(x) / std::numbers::ln2; }

namespace detail {

inline void validate_entropy_spec(const EntropySpec& spec) {
  if (!(spec.alpha > 0.0))
    throw InputError("EntropySpec: alpha must be positive");
  if (spec.alpha == 1.0)
    throw InputError("EntropySpec: alpha = 1 (Shannon limit) is unsupported; use e.g. 1.01");
  if (spec.method == EntropyMethod::Frobenius && spec.alpha != 2.0)
    throw InputError("EntropySpec: the Frobenius fast path requires alpha = 2");
}

} // namespace detail

/// Renyi alpha-entropy of a normalized Gram matrix, in bits.
///
/// The eigen method clamps tiny negative eigenvalues (numerical PSD
/// violations) to zero before raising to alpha. The Frobenius method is the
/// alpha = 2 identity -log2 ||G||_F^2 and skips the eigendecomposition.
inline double renyi_entropy(const GramMatrix& g, const EntropySpec& spec) {
  detail::validate_entropy_spec(spec);
  if (spec.method == EntropyMethod::Frobenius) {
    const double f = frobenius_sq(g.matrix());
    if (!(f > 0.0)) throw DegenerateError("renyi_entropy: ||G||_F^2 is not positive");
    return -log2_of(f);
  }
  const SpectralResult sr = sym_eigenvalues(g.matrix());
  double sum = 0.0;
  for (double lambda : sr.eigenvalues) {
    if (lambda <= 0.0) continue; // clamp numerical negatives to zero
    sum += std::pow(lambda, spec.alpha);
  }
  if (!(sum > 0.0))
    throw DegenerateError("renyi_entropy: all eigenvalues clamped to zero");
  return log2_of(sum) / (1.0 - spec.alpha);
}

/// Joint entropy: entropy of the trace-normalized Hadamard product of the
/// per-variable Gram matrices.
inline double joint_entropy(std::span<const GramMatrix> gs, const EntropySpec& spec) {
  detail::validate_entropy_spec(spec);
  if (gs.empty()) throw InputError("joint_entropy: empty Gram sequence");
  const std::size_t n = gs.front().dim();
  for (const GramMatrix& g : gs)
    if (g.dim() != n)
      throw DimensionError("joint_entropy: Gram dimension mismatch " + std::to_string(g.dim()) +
                           " vs " + std::to_string(n));
  DenseMatrix p = gs.front().matrix();
  for (std::size_t i = 1; i < gs.size(); ++i) p = hadamard(p, gs[i].matrix());
  const double tau = trace(p);
  if (!(tau > 0.0))
    throw DegenerateError("joint_entropy: Hadamard product has non-positive trace");
  for (double& e : p.data()) e /= tau;
  return renyi_entropy(GramMatrix::from_matrix(std::move(p), NormalizationMode::Trace), spec);
}

inline double joint_entropy(const std::vector<GramMatrix>& gs, const EntropySpec& spec) {
  return joint_entropy(std::span<const GramMatrix>(gs.data(), gs.size()), spec);
}

/// Mutual information I(A;B) = S(A) + S(B) - S(A,B), in bits. Symmetric in
/// its arguments by construction.
inline double mutual_information(const GramMatrix& a, const GramMatrix& b,
                                 const EntropySpec& spec) {
  if (a.dim() != b.dim())
    throw DimensionError("mutual_information: Gram dimension mismatch " +
                         std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  const GramMatrix gs[2] = {a, b};
  return renyi_entropy(a, spec) + renyi_entropy(b, spec) -
         joint_entropy(std::span<const GramMatrix>(gs, 2), spec);
}

} // namespace infoclip
