#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/losses.hpp"
#include "infoclip/lpam.hpp"
#include "infoclip/matrix.hpp"
#include "infoclip/rng.hpp"
#include "infoclip/synth.hpp"

namespace infoclip {

/// Diagnostics captured before each optimizer step.
struct StepRecord {
  std::size_t step = 0;
  LossBreakdown losses;
  double mi_ts = 0.0; // I_2 between the full teacher and student maps
};

struct EvalMetrics {
  std::size_t patches = 0;
  double accuracy = 0.0;
  double mean_iou = 0.0;
  double seen_accuracy = 0.0;
  double unseen_accuracy = 0.0;
  double seen_mean_iou = 0.0;
  double unseen_mean_iou = 0.0;
  std::vector<double> per_class_iou;  // indexed by class id
  std::vector<bool> per_class_defined; // false when a class is absent from labels and predictions
};

struct TrainReport {
  std::vector<StepRecord> steps;
  EvalMetrics metrics; // final evaluation over the run's eval scenes
  double wall_seconds = 0.0;
};

/// A finished run: the report plus everything needed to evaluate or
/// checkpoint it.
struct TrainResult {
  TrainReport report;
  LpamParams params;
  StudentAdapter adapters;
  SyntheticScene train_scene;
};

/// I_2 between two alignment maps over their trace-normalized row-Grams.
/// Equal to the negated distillation loss by definition.
inline double alignment_mi(const AlignmentMap& a, const AlignmentMap& b) {
  return -distillation_loss(FeatureBatch(a.scores), FeatureBatch(b.scores));
}

namespace detail {

struct AdamState {
  std::vector<double> m, v;
  std::size_t t = 0;
};

inline void sgd_update(double* param, const double* grad, std::size_t n, double lr) {
  for (std::size_t i = 0; i < n; ++i) param[i] -= lr * grad[i];
}

inline void adam_update(double* param, const double* grad, std::size_t n, double lr,
                        AdamState& st) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (st.m.size() != n) {
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
  }
  ++st.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < n; ++i) {
    st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * grad[i];
    st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

/// One sampled (patch, class) pair; r rows are taken per patch.
struct PairBatch {
  std::vector<std::size_t> patch; // length n
  std::vector<std::size_t> cls;   // length n
};

/// Uniform patches; per patch the true class plus kPairsPerPatch - 1
/// distractors drawn uniformly from the other classes (with replacement).
inline PairBatch sample_pairs(Rng& rng, const std::vector<std::size_t>& labels,
                              std::size_t n_classes, std::size_t batch_pairs) {
  PairBatch b;
  b.patch.reserve(batch_pairs);
  b.cls.reserve(batch_pairs);
  const std::size_t groups = batch_pairs / kPairsPerPatch;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t p = rng.uniform_index(labels.size());
    const std::size_t truth = labels[p];
    b.patch.push_back(p);
    b.cls.push_back(truth);
    for (std::size_t k = 1; k < kPairsPerPatch; ++k) {
      std::size_t c = rng.uniform_index(n_classes - 1);
      if (c >= truth) ++c; // uniform over classes != truth, one draw each
      b.patch.push_back(p);
      b.cls.push_back(c);
    }
  }
  return b;
}

inline DenseMatrix gather_rows(const DenseMatrix& src, const std::vector<std::size_t>& idx) {
  DenseMatrix out(idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) out(i, j) = src(idx[i], j);
  return out;
}

inline void scatter_add_rows(DenseMatrix& dst, const DenseMatrix& rows,
                             const std::vector<std::size_t>& idx) {
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < dst.cols(); ++j) dst(idx[i], j) += rows(i, j);
}

} // namespace detail

/// The full objective on one scene: task cross-entropy on the student map,
/// compression on the teacher triplet, distillation between the maps,
/// optimized over the shared alignment module and the student adapters.
/// Teacher features stay frozen throughout. Deterministic per config.
inline TrainResult train_distill(const TrainConfig& cfg) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  SyntheticScene scene =
      generate_scene(cfg, derive_stream(cfg.seed, streams::kTrainScene), SceneKind::Train);
  LpamParams params = lpam_init(cfg.dim, derive_stream(cfg.seed, streams::kLpamInit));
  StudentAdapter adapters = init_adapters(cfg);
  Rng sampler(derive_stream(cfg.seed, streams::kPairSampler));

  const DenseMatrix& xv = scene.patch_embeddings_teacher.values();
  const DenseMatrix& xl = scene.class_embeddings_teacher.values();
  const std::size_t n_patches = xv.rows();
  const std::size_t n_classes = xl.rows();
  const LossWeights weights{cfg.lambda1, cfg.lambda2};

  detail::AdamState st_wq, st_wk, st_gv, st_bv, st_gl, st_bl, st_av, st_al;
  TrainResult result{TrainReport{}, params, adapters, scene};
  result.report.steps.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) try {
    const FeatureBatch sv = apply_adapter(scene.patch_embeddings_teacher, adapters.a_v);
    const FeatureBatch sl = apply_adapter(scene.class_embeddings_teacher, adapters.a_l);
    const LpamForward ft = lpam_forward(scene.patch_embeddings_teacher,
                                        scene.class_embeddings_teacher, params);
    const LpamForward fs = lpam_forward(sv, sl, params);

    const TaskLossResult task = task_loss(fs.map, scene.labels);
    const detail::PairBatch pairs =
        detail::sample_pairs(sampler, scene.labels, n_classes, cfg.batch_pairs);
    const LossInputs inputs{FeatureBatch(detail::gather_rows(xv, pairs.patch)),
                            FeatureBatch(detail::gather_rows(xl, pairs.cls)),
                            FeatureBatch(detail::gather_rows(ft.map.scores, pairs.patch)),
                            FeatureBatch(detail::gather_rows(fs.map.scores, pairs.patch))};

    const double lc = compression_loss(inputs.dv, inputs.dl_expanded, inputs.r_teacher,
                                       cfg.include_teacher_entropy);
    const double ld = distillation_loss(inputs.r_teacher, inputs.r_student);
    const LossBreakdown breakdown =
        total_loss(cfg.task_weight * task.value, lc, ld, weights);
    if (!std::isfinite(breakdown.total))
      throw ConvergenceError("train_distill: non-finite total loss at step " +
                             std::to_string(step));
    result.report.steps.push_back(
        StepRecord{step, breakdown, alignment_mi(ft.map, fs.map)});

    const GradientBatch g = loss_gradients(inputs, weights, cfg.include_teacher_entropy);
    DenseMatrix u_teacher(n_patches, n_classes);
    detail::scatter_add_rows(u_teacher, g.r_teacher, pairs.patch);
    DenseMatrix u_student(n_patches, n_classes);
    detail::scatter_add_rows(u_student, g.r_student, pairs.patch);
    if (cfg.task_weight != 0.0) add_scaled(u_student, cfg.task_weight, task.d_scores);

    const LpamGradients gt = lpam_backward(u_teacher, ft);
    LpamGradients gs = lpam_backward(u_student, fs);
    add_param_gradients(gs, gt); // shared parameters: both pathways contribute

    // adapters sit only under the student pathway; teacher features are frozen
    const DenseMatrix d_av = matmul_tn(gs.dv, xv);
    const DenseMatrix d_al = matmul_tn(gs.dl, xl);

    const double lr = cfg.learning_rate;
    if (cfg.optimizer == Optimizer::Adam) {
      detail::adam_update(params.wq.data().data(), gs.wq.data().data(), params.wq.size(), lr,
                          st_wq);
      detail::adam_update(params.wk.data().data(), gs.wk.data().data(), params.wk.size(), lr,
                          st_wk);
      detail::adam_update(params.ln_v_gain.data(), gs.ln_v_gain.data(), cfg.dim, lr, st_gv);
      detail::adam_update(params.ln_v_bias.data(), gs.ln_v_bias.data(), cfg.dim, lr, st_bv);
      detail::adam_update(params.ln_l_gain.data(), gs.ln_l_gain.data(), cfg.dim, lr, st_gl);
      detail::adam_update(params.ln_l_bias.data(), gs.ln_l_bias.data(), cfg.dim, lr, st_bl);
      detail::adam_update(adapters.a_v.data().data(), d_av.data().data(), adapters.a_v.size(),
                          lr, st_av);
      detail::adam_update(adapters.a_l.data().data(), d_al.data().data(), adapters.a_l.size(),
                          lr, st_al);
    } else {
      detail::sgd_update(params.wq.data().data(), gs.wq.data().data(), params.wq.size(), lr);
      detail::sgd_update(params.wk.data().data(), gs.wk.data().data(), params.wk.size(), lr);
      detail::sgd_update(params.ln_v_gain.data(), gs.ln_v_gain.data(), cfg.dim, lr);
      detail::sgd_update(params.ln_v_bias.data(), gs.ln_v_bias.data(), cfg.dim, lr);
      detail::sgd_update(params.ln_l_gain.data(), gs.ln_l_gain.data(), cfg.dim, lr);
      detail::sgd_update(params.ln_l_bias.data(), gs.ln_l_bias.data(), cfg.dim, lr);
      detail::sgd_update(adapters.a_v.data().data(), d_av.data().data(), adapters.a_v.size(),
                         lr);
      detail::sgd_update(adapters.a_l.data().data(), d_al.data().data(), adapters.a_l.size(),
                         lr);
    }

    if (!params.wq.all_finite() || !params.wk.all_finite() || !adapters.a_v.all_finite() ||
        !adapters.a_l.all_finite())
      throw ConvergenceError("train_distill: parameters diverged at step " +
                             std::to_string(step));
  } catch (const ConvergenceError&) {
    throw;
  } catch (const Error& e) {
    // inputs were validated up front, so a mid-training library error means
    // the iterates blew up; report it as a divergence, with provenance
    throw ConvergenceError("train_distill: numerical failure at step approximately " +
                           std::to_string(result.report.steps.size()) + ": " + e.what());
  }

  result.params = params;
  result.adapters = adapters;
  result.train_scene = scene;
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// The eval scenes a config implies, one derived seed per scene.
inline std::vector<SyntheticScene> make_eval_scenes(const TrainConfig& cfg) {
  std::vector<SyntheticScene> scenes;
  scenes.reserve(cfg.eval_scenes);
  for (std::size_t i = 0; i < cfg.eval_scenes; ++i)
    scenes.push_back(
        generate_scene(cfg, derive_stream(cfg.seed, streams::kEvalSceneBase + i), SceneKind::Eval));
  return scenes;
}

/// Score per-patch class predictions against the scenes' labels: overall
/// accuracy, per-class recall averaged within the seen and unseen splits,
/// and IoU per class. Classes absent from both labels and predictions are
/// excluded from IoU means.
inline EvalMetrics score_predictions(const std::vector<std::vector<std::size_t>>& predictions,
                                     const std::vector<SyntheticScene>& scenes) {
  EvalMetrics m;
  if (scenes.empty()) return m;
  if (predictions.size() != scenes.size())
    throw DimensionError("score_predictions: prediction/scene count mismatch");
  const std::size_t n_classes = scenes.front().class_embeddings_teacher.samples();
  std::vector<std::size_t> inter(n_classes, 0), pred_count(n_classes, 0),
      label_count(n_classes, 0);
  std::vector<bool> seen = scenes.front().seen_mask;
  std::size_t correct = 0, total = 0;

  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SyntheticScene& scene = scenes[s];
    if (scene.class_embeddings_teacher.samples() != n_classes)
      throw DimensionError("score_predictions: scenes disagree on class count");
    if (predictions[s].size() != scene.labels.size())
      throw DimensionError("score_predictions: prediction/label length mismatch");
    for (std::size_t i = 0; i < scene.labels.size(); ++i) {
      const std::size_t pred = predictions[s][i];
      if (pred >= n_classes)
        throw InputError("score_predictions: predicted class out of range");
      const std::size_t truth = scene.labels[i];
      ++total;
      ++pred_count[pred];
      ++label_count[truth];
      if (pred == truth) {
        ++correct;
        ++inter[truth];
      }
    }
  }

  m.patches = total;
  m.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  m.per_class_iou.assign(n_classes, 0.0);
  m.per_class_defined.assign(n_classes, false);
  double iou_sum = 0.0, seen_iou_sum = 0.0, unseen_iou_sum = 0.0;
  double seen_acc_sum = 0.0, unseen_acc_sum = 0.0;
  std::size_t iou_n = 0, seen_iou_n = 0, unseen_iou_n = 0, seen_acc_n = 0, unseen_acc_n = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t uni = pred_count[c] + label_count[c] - inter[c];
    if (uni > 0) {
      const double iou = static_cast<double>(inter[c]) / static_cast<double>(uni);
      m.per_class_iou[c] = iou;
      m.per_class_defined[c] = true;
      iou_sum += iou;
      ++iou_n;
      (seen[c] ? seen_iou_sum : unseen_iou_sum) += iou;
      ++(seen[c] ? seen_iou_n : unseen_iou_n);
    }
    if (label_count[c] > 0) {
      const double acc = static_cast<double>(inter[c]) / static_cast<double>(label_count[c]);
      (seen[c] ? seen_acc_sum : unseen_acc_sum) += acc;
      ++(seen[c] ? seen_acc_n : unseen_acc_n);
    }
  }
  m.mean_iou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
  m.seen_mean_iou = seen_iou_n ? seen_iou_sum / static_cast<double>(seen_iou_n) : 0.0;
  m.unseen_mean_iou = unseen_iou_n ? unseen_iou_sum / static_cast<double>(unseen_iou_n) : 0.0;
  m.seen_accuracy = seen_acc_n ? seen_acc_sum / static_cast<double>(seen_acc_n) : 0.0;
  m.unseen_accuracy = unseen_acc_n ? unseen_acc_sum / static_cast<double>(unseen_acc_n) : 0.0;
  return m;
}

/// Argmax-over-classes prediction from the student alignment map on each
/// scene, scored by score_predictions. Ties keep the lowest class index.
inline EvalMetrics evaluate(const LpamParams& params, const StudentAdapter& adapters,
                            const std::vector<SyntheticScene>& scenes) {
  std::vector<std::vector<std::size_t>> predictions;
  predictions.reserve(scenes.size());
  for (const SyntheticScene& scene : scenes) {
    const FeatureBatch sv = apply_adapter(scene.patch_embeddings_teacher, adapters.a_v);
    const FeatureBatch sl = apply_adapter(scene.class_embeddings_teacher, adapters.a_l);
    const AlignmentMap map = lpam_forward(sv, sl, params).map;
    std::vector<std::size_t> preds(map.patches, 0);
    for (std::size_t i = 0; i < map.patches; ++i)
      for (std::size_t c = 1; c < map.classes; ++c)
        if (map.scores(i, c) > map.scores(i, preds[i])) preds[i] = c;
    predictions.push_back(std::move(preds));
  }
  return score_predictions(predictions, scenes);
}

/// Convenience wrapper: train, then evaluate on the config's eval scenes and
/// attach the metrics to the report.
inline TrainResult train_and_evaluate(const TrainConfig& cfg) {
  TrainResult r = train_distill(cfg);
  r.report.metrics = evaluate(r.params, r.adapters, make_eval_scenes(cfg));
  return r;
}

} // namespace infoclip
