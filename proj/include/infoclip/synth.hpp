#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/lpam.hpp"
#include "infoclip/matrix.hpp"
#include "infoclip/rng.hpp"

namespace infoclip {

enum class Optimizer { Sgd, Adam };

/// Everything a training or evaluation run depends on. A config plus its
/// seed pins the run bit-exactly.
struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t steps = 200;
  double learning_rate = 1e-2;
  std::size_t batch_pairs = 128; // sampled (patch, class) pairs per step
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  std::size_t grid_h = 8;
  std::size_t grid_w = 8;
  std::size_t num_classes = 10;
  std::size_t dim = 16;
  double noise_sigma = 0.1;
  Optimizer optimizer = Optimizer::Adam;
  double seen_fraction = 0.7;      // share of classes available at train time
  double adapter_noise = 0.5;      // scale of the student adapters' initial corruption
  double task_weight = 1.0;        // multiplier on the cross-entropy term
  std::size_t eval_scenes = 4;
  bool include_teacher_entropy = false;
};

/// Pairs drawn per sampled patch: the true class plus three distractors.
inline constexpr std::size_t kPairsPerPatch = 4;

/// Stream ids for derive_stream(cfg.seed, ...). Each consumer of randomness
/// gets its own child seed so changing one never perturbs another.
namespace streams {
inline constexpr std::uint64_t kLpamInit = 0;
inline constexpr std::uint64_t kPrototypes = 1;
inline constexpr std::uint64_t kAdapterInit = 2;
inline constexpr std::uint64_t kTrainScene = 3;
inline constexpr std::uint64_t kPairSampler = 4;
inline constexpr std::uint64_t kEvalSceneBase = 16; // + scene index
} // namespace streams

inline std::size_t seen_class_count(const TrainConfig& cfg) {
  const double raw = std::round(cfg.seen_fraction * static_cast<double>(cfg.num_classes));
  std::size_t n = static_cast<std::size_t>(raw);
  if (n < 2) n = 2;
  if (n > cfg.num_classes - 1) n = cfg.num_classes - 1;
  return n;
}

inline void validate_config(const TrainConfig& cfg) {
  if (cfg.dim < 2) throw InputError("TrainConfig: dim must be >= 2");
  if (cfg.num_classes < 3)
    throw InputError("TrainConfig: num_classes must be >= 3 (need >= 2 seen and >= 1 unseen)");
  if (cfg.grid_h == 0 || cfg.grid_w == 0 || cfg.grid_h * cfg.grid_w < 2)
    throw InputError("TrainConfig: grid must contain at least 2 patches");
  if (!(cfg.learning_rate > 0.0)) throw InputError("TrainConfig: learning_rate must be > 0");
  if (cfg.batch_pairs < kPairsPerPatch || cfg.batch_pairs % kPairsPerPatch != 0)
    throw InputError("TrainConfig: batch_pairs must be a positive multiple of " +
                     std::to_string(kPairsPerPatch));
  if (!(cfg.lambda1 >= 0.0) || !(cfg.lambda2 >= 0.0))
    throw InputError("TrainConfig: lambda1/lambda2 must be >= 0");
  if (!(cfg.noise_sigma >= 0.0)) throw InputError("TrainConfig: noise_sigma must be >= 0");
  if (!(cfg.seen_fraction > 0.0) || !(cfg.seen_fraction < 1.0))
    throw InputError("TrainConfig: seen_fraction must lie in (0, 1)");
  if (!(cfg.adapter_noise >= 0.0)) throw InputError("TrainConfig: adapter_noise must be >= 0");
  if (!(cfg.task_weight >= 0.0)) throw InputError("TrainConfig: task_weight must be >= 0");
  if (cfg.eval_scenes == 0) throw InputError("TrainConfig: eval_scenes must be >= 1");
}

/// One synthetic image: teacher patch embeddings over an H x W grid, the
/// class embeddings visible to this scene, ground-truth labels indexing that
/// class axis, and the per-class seen/unseen flags.
struct SyntheticScene {
  FeatureBatch patch_embeddings_teacher;
  FeatureBatch class_embeddings_teacher;
  std::vector<std::size_t> labels;
  std::vector<bool> seen_mask;
};

enum class SceneKind { Train, Eval };

/// Class prototypes on the unit sphere, derived from cfg.seed alone so every
/// scene of a run shares them.
inline DenseMatrix class_prototypes(const TrainConfig& cfg) {
  Rng rng(derive_stream(cfg.seed, streams::kPrototypes));
  DenseMatrix protos(cfg.num_classes, cfg.dim);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      const double g = rng.gaussian();
      protos(c, j) = g;
      norm_sq += g * g;
    }
    const double norm = std::sqrt(norm_sq);
    if (!(norm > 0.0)) throw DegenerateError("class_prototypes: zero-norm draw");
    for (std::size_t j = 0; j < cfg.dim; ++j) protos(c, j) /= norm;
  }
  return protos;
}

/// Train scenes use only the seen-class prefix of the prototype list; eval
/// scenes use all classes and are nudged deterministically so both a seen
/// and an unseen class appear among the labels.
inline SyntheticScene generate_scene(const TrainConfig& cfg, std::uint64_t seed,
                                     SceneKind kind = SceneKind::Train) {
  validate_config(cfg);
  const DenseMatrix protos = class_prototypes(cfg);
  const std::size_t n_seen = seen_class_count(cfg);
  const std::size_t n_classes = (kind == SceneKind::Train) ? n_seen : cfg.num_classes;
  const std::size_t n_patches = cfg.grid_h * cfg.grid_w;

  Rng rng(seed);
  std::vector<std::size_t> labels(n_patches);
  for (std::size_t i = 0; i < n_patches; ++i) labels[i] = rng.uniform_index(n_classes);

  if (kind == SceneKind::Eval) {
    bool has_seen = false, has_unseen = false;
    for (std::size_t l : labels) (l < n_seen ? has_seen : has_unseen) = true;
    if (!has_seen) labels.front() = 0;
    if (!has_unseen) labels.back() = n_seen;
  }

  DenseMatrix patches(n_patches, cfg.dim);
  for (std::size_t i = 0; i < n_patches; ++i) {
    if (cfg.noise_sigma == 0.0) {
      for (std::size_t j = 0; j < cfg.dim; ++j) patches(i, j) = protos(labels[i], j);
      continue;
    }
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      const double v = protos(labels[i], j) + cfg.noise_sigma * rng.gaussian();
      patches(i, j) = v;
      norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (!(norm > 0.0)) throw DegenerateError("generate_scene: zero-norm patch");
    for (std::size_t j = 0; j < cfg.dim; ++j) patches(i, j) /= norm;
  }

  DenseMatrix classes(n_classes, cfg.dim);
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t j = 0; j < cfg.dim; ++j) classes(c, j) = protos(c, j);

  std::vector<bool> seen(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) seen[c] = c < n_seen;

  return SyntheticScene{FeatureBatch(std::move(patches)), FeatureBatch(std::move(classes)),
                        std::move(labels), std::move(seen)};
}

/// Trainable linear maps that turn frozen teacher features into student
/// features, standing in for a fine-tuned encoder pair.
struct StudentAdapter {
  DenseMatrix a_v, a_l; // d x d
};

/// Adapters start at identity plus seeded Gaussian corruption of scale
/// adapter_noise/sqrt(d); distillation has to undo this corruption.
inline StudentAdapter init_adapters(const TrainConfig& cfg) {
  validate_config(cfg);
  Rng rng(derive_stream(cfg.seed, streams::kAdapterInit));
  const double scale = cfg.adapter_noise / std::sqrt(static_cast<double>(cfg.dim));
  StudentAdapter a{DenseMatrix::identity(cfg.dim), DenseMatrix::identity(cfg.dim)};
  for (double& e : a.a_v.data()) e += scale * rng.gaussian();
  for (double& e : a.a_l.data()) e += scale * rng.gaussian();
  return a;
}

/// Student features: each row mapped through the adapter, Y = X A^T.
inline FeatureBatch apply_adapter(const FeatureBatch& teacher, const DenseMatrix& adapter) {
  if (adapter.rows() != teacher.dim() || adapter.cols() != teacher.dim())
    throw DimensionError("apply_adapter: adapter must be d x d for feature dim " +
                         std::to_string(teacher.dim()));
  return FeatureBatch(matmul_nt(teacher.values(), adapter));
}

struct TaskLossResult {
  double value = 0.0;
  DenseMatrix d_scores; // same shape as the alignment map
};

/// Mean softmax cross-entropy (natural log) of each alignment row against
/// its patch label, with the analytic gradient (softmax - onehot)/patches.
inline TaskLossResult task_loss(const AlignmentMap& r, const std::vector<std::size_t>& labels) {
  if (labels.size() != r.patches)
    throw DimensionError("task_loss: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(r.patches) + " patches");
  for (std::size_t l : labels)
    if (l >= r.classes)
      throw InputError("task_loss: label " + std::to_string(l) + " out of range [0, " +
                       std::to_string(r.classes) + ")");
  TaskLossResult out;
  out.d_scores = DenseMatrix(r.patches, r.classes);
  const double inv_n = 1.0 / static_cast<double>(r.patches);
  double total = 0.0;
  std::vector<double> p(r.classes);
  for (std::size_t i = 0; i < r.patches; ++i) {
    double m = r.scores(i, 0);
    for (std::size_t c = 1; c < r.classes; ++c) m = std::max(m, r.scores(i, c));
    double z = 0.0;
    for (std::size_t c = 0; c < r.classes; ++c) {
      p[c] = std::exp(r.scores(i, c) - m);
      z += p[c];
    }
    total += std::log(z) - (r.scores(i, labels[i]) - m);
    for (std::size_t c = 0; c < r.classes; ++c)
      out.d_scores(i, c) = (p[c] / z - (c == labels[i] ? 1.0 : 0.0)) * inv_n;
  }
  out.value = total * inv_n;
  return out;
}

} // namespace infoclip
