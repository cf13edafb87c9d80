#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "infoclip/losses.hpp"
#include "infoclip/lpam.hpp"
#include "infoclip/matrix.hpp"
#include "infoclip/rng.hpp"

namespace infoclip {

struct GradCheckCase {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  double max_rel_error = 0.0;
};

namespace detail {

/// Largest entry deviation, relative to the oracle's largest entry floored
/// at 1, so near-zero oracles do not inflate the ratio.
inline double rel_error(const DenseMatrix& got, const DenseMatrix& oracle) {
  require_same_shape(got, oracle, "rel_error");
  double num = 0.0, den = 1.0;
  for (std::size_t k = 0; k < got.data().size(); ++k) {
    num = std::max(num, std::abs(got.data()[k] - oracle.data()[k]));
    den = std::max(den, std::abs(oracle.data()[k]));
  }
  return num / den;
}

inline DenseMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  DenseMatrix m(rows, cols);
  for (double& e : m.data()) e = rng.gaussian();
  return m;
}

} // namespace detail

/// Compare loss_gradients against the central-difference oracle on one
/// seeded instance; returns the worst relative error over all four inputs.
inline double check_loss_gradients_once(std::uint64_t seed, std::size_t n, std::size_t d_feat,
                                        std::size_t d_map, const LossWeights& w, double h,
                                        bool include_teacher_entropy = false) {
  Rng rng(seed);
  const DenseMatrix dv = detail::random_matrix(rng, n, d_feat);
  const DenseMatrix dl = detail::random_matrix(rng, n, d_feat);
  const DenseMatrix rt = detail::random_matrix(rng, n, d_map);
  const DenseMatrix rs = detail::random_matrix(rng, n, d_map);

  const LossInputs inputs{FeatureBatch(dv), FeatureBatch(dl), FeatureBatch(rt),
                          FeatureBatch(rs)};
  const GradientBatch g = loss_gradients(inputs, w, include_teacher_entropy);

  const auto objective = [&](const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& t,
                             const DenseMatrix& s) {
    double v = 0.0;
    if (w.lambda1 != 0.0)
      v += w.lambda1 * compression_loss(FeatureBatch(a), FeatureBatch(b), FeatureBatch(t),
                                        include_teacher_entropy);
    if (w.lambda2 != 0.0)
      v += w.lambda2 * distillation_loss(FeatureBatch(t), FeatureBatch(s));
    return v;
  };

  double worst = 0.0;
  worst = std::max(worst, detail::rel_error(g.dv, finite_diff_oracle([&](const DenseMatrix& x) {
                            return objective(x, dl, rt, rs);
                          }, dv, h)));
  worst = std::max(worst, detail::rel_error(g.dl_expanded,
                                            finite_diff_oracle([&](const DenseMatrix& x) {
                                              return objective(dv, x, rt, rs);
                                            }, dl, h)));
  worst = std::max(worst, detail::rel_error(g.r_teacher,
                                            finite_diff_oracle([&](const DenseMatrix& x) {
                                              return objective(dv, dl, x, rs);
                                            }, rt, h)));
  worst = std::max(worst, detail::rel_error(g.r_student,
                                            finite_diff_oracle([&](const DenseMatrix& x) {
                                              return objective(dv, dl, rt, x);
                                            }, rs, h)));
  return worst;
}

/// Compare lpam_backward against the central-difference oracle of the probe
/// sum(u o R) on one seeded instance: both inputs, both projections, and
/// all four LayerNorm vectors.
inline double check_lpam_backward_once(std::uint64_t seed, std::size_t patches,
                                       std::size_t classes, std::size_t d, double h) {
  Rng rng(seed);
  LpamParams params = lpam_init(d, rng.uniform_index(1u << 30));
  for (double& e : params.ln_v_gain) e = 1.0 + 0.3 * rng.gaussian();
  for (double& e : params.ln_v_bias) e = 0.3 * rng.gaussian();
  for (double& e : params.ln_l_gain) e = 1.0 + 0.3 * rng.gaussian();
  for (double& e : params.ln_l_bias) e = 0.3 * rng.gaussian();
  const DenseMatrix dv = detail::random_matrix(rng, patches, d);
  const DenseMatrix dl = detail::random_matrix(rng, classes, d);
  const DenseMatrix u = detail::random_matrix(rng, patches, classes);

  const auto probe = [&](const DenseMatrix& a, const DenseMatrix& b, const LpamParams& p) {
    const AlignmentMap map = lpam_forward(FeatureBatch(a), FeatureBatch(b), p).map;
    return inner(u, map.scores);
  };

  const LpamForward fwd = lpam_forward(FeatureBatch(dv), FeatureBatch(dl), params);
  const LpamGradients g = lpam_backward(u, fwd);

  double worst = 0.0;
  worst = std::max(worst, detail::rel_error(g.dv, finite_diff_oracle([&](const DenseMatrix& x) {
                            return probe(x, dl, params);
                          }, dv, h)));
  worst = std::max(worst, detail::rel_error(g.dl, finite_diff_oracle([&](const DenseMatrix& x) {
                            return probe(dv, x, params);
                          }, dl, h)));
  worst = std::max(worst, detail::rel_error(g.wq, finite_diff_oracle([&](const DenseMatrix& x) {
                            LpamParams p = params;
                            p.wq = x;
                            return probe(dv, dl, p);
                          }, params.wq, h)));
  worst = std::max(worst, detail::rel_error(g.wk, finite_diff_oracle([&](const DenseMatrix& x) {
                            LpamParams p = params;
                            p.wk = x;
                            return probe(dv, dl, p);
                          }, params.wk, h)));

  const auto check_vec = [&](const std::vector<double>& grad, std::vector<double> LpamParams::*field,
                             const std::vector<double>& value) {
    const DenseMatrix got(1, d, grad);
    const DenseMatrix at(1, d, value);
    const DenseMatrix oracle = finite_diff_oracle(
        [&](const DenseMatrix& x) {
          LpamParams p = params;
          p.*field = std::vector<double>(x.data().begin(), x.data().end());
          return probe(dv, dl, p);
        },
        at, h);
    return detail::rel_error(got, oracle);
  };
  worst = std::max(worst, check_vec(g.ln_v_gain, &LpamParams::ln_v_gain, params.ln_v_gain));
  worst = std::max(worst, check_vec(g.ln_v_bias, &LpamParams::ln_v_bias, params.ln_v_bias));
  worst = std::max(worst, check_vec(g.ln_l_gain, &LpamParams::ln_l_gain, params.ln_l_gain));
  worst = std::max(worst, check_vec(g.ln_l_bias, &LpamParams::ln_l_bias, params.ln_l_bias));
  return worst;
}

/// The full finite-difference suite: seeded loss and alignment-module
/// instances across a small grid of shapes and weight settings.
inline GradCheckReport run_gradient_checks(std::uint64_t seed, std::size_t loss_instances = 20,
                                           std::size_t lpam_instances = 20, double h = 1e-6) {
  GradCheckReport report;
  const std::size_t ns[] = {4, 8, 16};
  const std::size_t ds[] = {3, 8};
  const LossWeights ws[] = {{1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {0.7, 2.5}};
  for (std::size_t i = 0; i < loss_instances; ++i) {
    const std::size_t n = ns[i % 3];
    const std::size_t d_feat = ds[i % 2];
    const std::size_t d_map = ds[(i + 1) % 2];
    const LossWeights& w = ws[i % 4];
    const bool ite = i % 5 == 4; // exercise the optional teacher-entropy term too
    const double e =
        check_loss_gradients_once(derive_stream(seed, 100 + i), n, d_feat, d_map, w, h, ite);
    report.cases.push_back(
        {"losses[" + std::to_string(i) + "] n=" + std::to_string(n), e});
  }
  const std::size_t ps[] = {3, 5, 8};
  const std::size_t cs[] = {2, 4};
  const std::size_t dd[] = {4, 6};
  for (std::size_t i = 0; i < lpam_instances; ++i) {
    const double e = check_lpam_backward_once(derive_stream(seed, 200 + i), ps[i % 3], cs[i % 2],
                                              dd[i % 2], h);
    report.cases.push_back({"lpam[" + std::to_string(i) + "]", e});
  }
  for (const GradCheckCase& c : report.cases)
    report.max_rel_error = std::max(report.max_rel_error, c.max_rel_error);
  return report;
}

} // namespace infoclip
