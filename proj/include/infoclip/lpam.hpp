#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/matrix.hpp"
#include "infoclip/rng.hpp"

namespace infoclip {

/// Parameters of the alignment module: per-modality LayerNorm affine pairs
/// and the query/key projections.
struct LpamParams {
  std::size_t d = 0;
  double eps = 1e-5;
  DenseMatrix wq, wk; // d x d
  std::vector<double> ln_v_gain, ln_v_bias;
  std::vector<double> ln_l_gain, ln_l_bias;
};

inline void validate_params(const LpamParams& p) {
  if (p.d == 0) throw InputError("LpamParams: d must be positive");
  if (!(p.eps > 0.0)) throw InputError("LpamParams: eps must be positive");
  if (p.wq.rows() != p.d || p.wq.cols() != p.d || p.wk.rows() != p.d || p.wk.cols() != p.d)
    throw DimensionError("LpamParams: projection matrices must be d x d");
  if (p.ln_v_gain.size() != p.d || p.ln_v_bias.size() != p.d || p.ln_l_gain.size() != p.d ||
      p.ln_l_bias.size() != p.d)
    throw DimensionError("LpamParams: LayerNorm vectors must have length d");
  if (!p.wq.all_finite() || !p.wk.all_finite())
    throw InputError("LpamParams: non-finite projection entry");
  for (const std::vector<double>* v : {&p.ln_v_gain, &p.ln_v_bias, &p.ln_l_gain, &p.ln_l_bias})
    for (double e : *v)
      if (!std::isfinite(e)) throw InputError("LpamParams: non-finite LayerNorm entry");
}

/// Fresh parameters: LayerNorm starts as pure normalization (gain 1, bias 0)
/// and wq/wk entries are uniform in [-1/sqrt(d), +1/sqrt(d)] so the scaled
/// attention term starts on the same scale as the residual similarity.
inline LpamParams lpam_init(std::size_t d, std::uint64_t seed, double eps = 1e-5) {
  if (d == 0) throw InputError("lpam_init: d must be positive");
  if (!(eps > 0.0)) throw InputError("lpam_init: eps must be positive");
  LpamParams p;
  p.d = d;
  p.eps = eps;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(seed);
  p.wq = DenseMatrix(d, d);
  for (double& e : p.wq.data()) e = rng.uniform(-bound, bound);
  p.wk = DenseMatrix(d, d);
  for (double& e : p.wk.data()) e = rng.uniform(-bound, bound);
  p.ln_v_gain.assign(d, 1.0);
  p.ln_v_bias.assign(d, 0.0);
  p.ln_l_gain.assign(d, 1.0);
  p.ln_l_bias.assign(d, 0.0);
  return p;
}

/// Patch-to-class relevance scores, one row per patch.
struct AlignmentMap {
  std::size_t patches = 0;
  std::size_t classes = 0;
  DenseMatrix scores;

  AlignmentMap() = default;
  explicit AlignmentMap(DenseMatrix s)
      : patches(s.rows()), classes(s.cols()), scores(std::move(s)) {
    if (!scores.all_finite()) throw InputError("AlignmentMap: non-finite score");
  }
};

namespace detail {

struct LayerNormCache {
  DenseMatrix xhat; // normalized rows before the affine map
  std::vector<double> inv_std;
};

/// Row-wise LayerNorm with population variance; caches what the backward
/// pass needs.
inline DenseMatrix layer_norm_rows(const DenseMatrix& x, const std::vector<double>& gain,
                                   const std::vector<double>& bias, double eps,
                                   LayerNormCache* cache = nullptr) {
  const std::size_t d = x.cols();
  if (gain.size() != d || bias.size() != d)
    throw DimensionError("layer_norm: gain/bias length " + std::to_string(gain.size()) + "/" +
                         std::to_string(bias.size()) + " does not match feature dim " +
                         std::to_string(d));
  if (!(eps > 0.0)) throw InputError("layer_norm: eps must be positive");
  DenseMatrix out(x.rows(), d);
  if (cache) {
    cache->xhat = DenseMatrix(x.rows(), d);
    cache->inv_std.assign(x.rows(), 0.0);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double xhat = (x(i, j) - mean) * inv_std;
      if (cache) cache->xhat(i, j) = xhat;
      out(i, j) = xhat * gain[j] + bias[j];
    }
    if (cache) cache->inv_std[i] = inv_std;
  }
  return out;
}

/// Backward through one LayerNorm: returns the input gradient and adds the
/// gain/bias gradients into the provided accumulators.
inline DenseMatrix layer_norm_backward(const DenseMatrix& upstream, const LayerNormCache& cache,
                                       const std::vector<double>& gain,
                                       std::vector<double>& d_gain, std::vector<double>& d_bias) {
  require_same_shape(upstream, cache.xhat, "layer_norm_backward");
  const std::size_t d = upstream.cols();
  DenseMatrix out(upstream.rows(), d);
  for (std::size_t i = 0; i < upstream.rows(); ++i) {
    double w_mean = 0.0, wx_mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = gain[j] * upstream(i, j);
      w_mean += w;
      wx_mean += w * cache.xhat(i, j);
    }
    w_mean /= static_cast<double>(d);
    wx_mean /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double w = gain[j] * upstream(i, j);
      out(i, j) = cache.inv_std[i] * (w - w_mean - cache.xhat(i, j) * wx_mean);
      d_gain[j] += upstream(i, j) * cache.xhat(i, j);
      d_bias[j] += upstream(i, j);
    }
  }
  return out;
}

} // namespace detail

/// Row-wise LayerNorm over the feature axis: (x - mean)/sqrt(var + eps),
/// population variance, then the affine map with gain and bias.
inline FeatureBatch layer_norm(const FeatureBatch& x, const std::vector<double>& gain,
                               const std::vector<double>& bias, double eps) {
  return FeatureBatch(detail::layer_norm_rows(x.values(), gain, bias, eps));
}

/// Everything the backward pass needs from one forward evaluation.
struct LpamForward {
  AlignmentMap map;
  DenseMatrix v, l;   // LayerNorm outputs
  DenseMatrix q, k;   // projected queries / keys
  detail::LayerNormCache ln_v, ln_l;
  DenseMatrix wq, wk; // projections as of this call
  std::vector<double> gain_v, gain_l;
  double inv_sqrt_d = 0.0;
};

/// R = Q K^T / sqrt(d) + V L^T with V = LN(dv), L = LN(dl), Q = V wq^T,
/// K = L wk^T. The returned state carries every cache the backward pass uses.
inline LpamForward lpam_forward(const FeatureBatch& dv, const FeatureBatch& dl,
                                const LpamParams& p) {
  validate_params(p);
  if (dv.dim() != p.d || dl.dim() != p.d)
    throw DimensionError("lpam_forward: feature dim (" + std::to_string(dv.dim()) + ", " +
                         std::to_string(dl.dim()) + ") does not match parameter dim " +
                         std::to_string(p.d));
  LpamForward f;
  f.v = detail::layer_norm_rows(dv.values(), p.ln_v_gain, p.ln_v_bias, p.eps, &f.ln_v);
  f.l = detail::layer_norm_rows(dl.values(), p.ln_l_gain, p.ln_l_bias, p.eps, &f.ln_l);
  f.q = matmul_nt(f.v, p.wq);
  f.k = matmul_nt(f.l, p.wk);
  f.inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.d));
  DenseMatrix scores = matmul_nt(f.q, f.k);
  const DenseMatrix residual = matmul_nt(f.v, f.l);
  for (std::size_t idx = 0; idx < scores.data().size(); ++idx)
    scores.data()[idx] = scores.data()[idx] * f.inv_sqrt_d + residual.data()[idx];
  f.map = AlignmentMap(std::move(scores));
  f.wq = p.wq;
  f.wk = p.wk;
  f.gain_v = p.ln_v_gain;
  f.gain_l = p.ln_l_gain;
  return f;
}

/// Gradients of one backward call. Parameter fields from teacher and student
/// pathway calls are summed with add_param_gradients; the input gradients
/// stay per-call.
struct LpamGradients {
  DenseMatrix wq, wk;
  std::vector<double> ln_v_gain, ln_v_bias, ln_l_gain, ln_l_bias;
  DenseMatrix dv, dl;
};

/// Exact reverse-mode gradients through both the scaled attention branch and
/// the residual similarity branch, then through both LayerNorms.
inline LpamGradients lpam_backward(const DenseMatrix& upstream, const LpamForward& f) {
  if (upstream.rows() != f.map.patches || upstream.cols() != f.map.classes)
    throw DimensionError("lpam_backward: upstream is " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + ", cached map is " +
                         std::to_string(f.map.patches) + "x" + std::to_string(f.map.classes));
  const std::size_t d = f.wq.rows();
  LpamGradients g;

  // attention branch: R_attn = Q K^T / sqrt(d)
  DenseMatrix d_q = matmul(upstream, f.k);
  for (double& e : d_q.data()) e *= f.inv_sqrt_d;
  DenseMatrix d_k = matmul_tn(upstream, f.q);
  for (double& e : d_k.data()) e *= f.inv_sqrt_d;

  g.wq = matmul_tn(d_q, f.v);
  g.wk = matmul_tn(d_k, f.l);

  // residual branch adds U L / U^T V to the LayerNorm-output gradients
  DenseMatrix d_v = matmul(d_q, f.wq);
  add_scaled(d_v, 1.0, matmul(upstream, f.l));
  DenseMatrix d_l = matmul(d_k, f.wk);
  add_scaled(d_l, 1.0, matmul_tn(upstream, f.v));

  g.ln_v_gain.assign(d, 0.0);
  g.ln_v_bias.assign(d, 0.0);
  g.ln_l_gain.assign(d, 0.0);
  g.ln_l_bias.assign(d, 0.0);
  g.dv = detail::layer_norm_backward(d_v, f.ln_v, f.gain_v, g.ln_v_gain, g.ln_v_bias);
  g.dl = detail::layer_norm_backward(d_l, f.ln_l, f.gain_l, g.ln_l_gain, g.ln_l_bias);
  return g;
}

/// Sum the parameter gradients of a second backward call into an
/// accumulator, leaving the per-call input gradients of `acc` untouched.
/// This is the shared-parameter rule for evaluating the module on both the
/// teacher and student pathways.
inline void add_param_gradients(LpamGradients& acc, const LpamGradients& g) {
  require_same_shape(acc.wq, g.wq, "add_param_gradients");
  add_scaled(acc.wq, 1.0, g.wq);
  add_scaled(acc.wk, 1.0, g.wk);
  for (std::size_t j = 0; j < acc.ln_v_gain.size(); ++j) {
    acc.ln_v_gain[j] += g.ln_v_gain[j];
    acc.ln_v_bias[j] += g.ln_v_bias[j];
    acc.ln_l_gain[j] += g.ln_l_gain[j];
    acc.ln_l_bias[j] += g.ln_l_bias[j];
  }
}

} // namespace infoclip
