#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "helpers.hpp"

using namespace infoclip;

namespace {

bool scenes_identical(const SyntheticScene& a, const SyntheticScene& b) {
  return testutil::bitwise_equal(a.patch_embeddings_teacher.values(),
                                 b.patch_embeddings_teacher.values()) &&
         testutil::bitwise_equal(a.class_embeddings_teacher.values(),
                                 b.class_embeddings_teacher.values()) &&
         a.labels == b.labels && a.seen_mask == b.seen_mask;
}

} // namespace

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));

  TrainConfig bad = cfg;
  bad.dim = 1;
  CHECK_THROWS_AS(validate_config(bad), InputError);
  bad = cfg;
  bad.num_classes = 2;
  CHECK_THROWS_AS(validate_config(bad), InputError);
  bad = cfg;
  bad.batch_pairs = 3;
  CHECK_THROWS_AS(validate_config(bad), InputError);
  bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(validate_config(bad), InputError);
  bad = cfg;
  bad.seen_fraction = 1.0;
  CHECK_THROWS_AS(validate_config(bad), InputError);
  bad = cfg;
  bad.lambda1 = -0.5;
  CHECK_THROWS_AS(validate_config(bad), InputError);
  bad = cfg;
  bad.grid_h = 1;
  bad.grid_w = 1;
  CHECK_THROWS_AS(validate_config(bad), InputError);
}

TEST_CASE("seen class split") {
  TrainConfig cfg;
  cfg.num_classes = 10;
  cfg.seen_fraction = 0.7;
  CHECK(seen_class_count(cfg) == 7);
  cfg.seen_fraction = 0.05;
  CHECK(seen_class_count(cfg) == 2); // floor: at least two classes to train on
  cfg.seen_fraction = 0.99;
  CHECK(seen_class_count(cfg) == 9); // ceiling: at least one class held out
  cfg.num_classes = 6;
  cfg.seen_fraction = 0.7;
  CHECK(seen_class_count(cfg) == 4);
}

TEST_CASE("prototypes sit on the unit sphere and depend only on the seed") {
  TrainConfig cfg;
  cfg.num_classes = 5;
  cfg.dim = 7;
  const DenseMatrix p = class_prototypes(cfg);
  REQUIRE(p.rows() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < 7; ++j) norm_sq += p(i, j) * p(i, j);
    CHECK(norm_sq == Catch::Approx(1.0).margin(1e-12));
  }

  TrainConfig other = cfg;
  other.steps = 999;       // unrelated fields must not matter
  other.noise_sigma = 0.5;
  CHECK(testutil::bitwise_equal(p, class_prototypes(other)));
  other = cfg;
  other.seed = 1;
  CHECK_FALSE(testutil::bitwise_equal(p, class_prototypes(other)));
}

TEST_CASE("noise-free scenes copy prototypes exactly") {
  TrainConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.num_classes = 6;
  cfg.dim = 8;
  const DenseMatrix protos = class_prototypes(cfg);
  const SyntheticScene scene =
      generate_scene(cfg, derive_stream(cfg.seed, streams::kTrainScene), SceneKind::Train);
  for (std::size_t i = 0; i < scene.labels.size(); ++i)
    for (std::size_t j = 0; j < cfg.dim; ++j)
      CHECK(scene.patch_embeddings_teacher.values()(i, j) == protos(scene.labels[i], j));
}

TEST_CASE("scene generation is deterministic") {
  TrainConfig cfg;
  cfg.num_classes = 6;
  cfg.dim = 8;
  const std::uint64_t s = derive_stream(cfg.seed, streams::kTrainScene);
  CHECK(scenes_identical(generate_scene(cfg, s, SceneKind::Train),
                         generate_scene(cfg, s, SceneKind::Train)));
  CHECK_FALSE(scenes_identical(
      generate_scene(cfg, s, SceneKind::Train),
      generate_scene(cfg, derive_stream(cfg.seed, streams::kEvalSceneBase), SceneKind::Eval)));
}

TEST_CASE("train scenes use only seen classes; eval scenes span both") {
  TrainConfig cfg;
  cfg.num_classes = 6;
  cfg.dim = 8;
  const std::size_t n_seen = seen_class_count(cfg);

  const SyntheticScene train =
      generate_scene(cfg, derive_stream(cfg.seed, streams::kTrainScene), SceneKind::Train);
  CHECK(train.class_embeddings_teacher.samples() == n_seen);
  CHECK(train.seen_mask.size() == n_seen);
  for (std::size_t c : train.labels) CHECK(c < n_seen);
  for (bool s : train.seen_mask) CHECK(s);

  for (std::uint64_t i = 0; i < 50; ++i) {
    const SyntheticScene eval =
        generate_scene(cfg, derive_stream(i, streams::kEvalSceneBase), SceneKind::Eval);
    CHECK(eval.class_embeddings_teacher.samples() == cfg.num_classes);
    bool any_seen = false, any_unseen = false;
    for (std::size_t c : eval.labels) {
      REQUIRE(c < cfg.num_classes);
      (c < n_seen ? any_seen : any_unseen) = true;
    }
    CHECK(any_seen);
    CHECK(any_unseen);
    for (std::size_t c = 0; c < cfg.num_classes; ++c)
      CHECK(eval.seen_mask[c] == (c < n_seen));
  }
}

TEST_CASE("noisy patches stay closest to their own prototype") {
  TrainConfig cfg;
  cfg.seed = 0;
  cfg.num_classes = 6;
  cfg.dim = 8;
  cfg.grid_h = 8;
  cfg.grid_w = 8;
  cfg.noise_sigma = 0.1;
  const DenseMatrix protos = class_prototypes(cfg);
  const SyntheticScene scene =
      generate_scene(cfg, derive_stream(cfg.seed, streams::kEvalSceneBase), SceneKind::Eval);

  std::size_t hits = 0;
  for (std::size_t i = 0; i < scene.labels.size(); ++i) {
    std::size_t best = 0;
    double best_dot = -1e300;
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cfg.dim; ++j)
        dot += scene.patch_embeddings_teacher.values()(i, j) * protos(c, j);
      if (dot > best_dot) {
        best_dot = dot;
        best = c;
      }
    }
    if (best == scene.labels[i]) ++hits;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(scene.labels.size()) >= 0.95);
}

TEST_CASE("patch embeddings are unit vectors when noise is on") {
  TrainConfig cfg;
  cfg.noise_sigma = 0.3;
  const SyntheticScene scene =
      generate_scene(cfg, derive_stream(cfg.seed, streams::kTrainScene), SceneKind::Train);
  const DenseMatrix& x = scene.patch_embeddings_teacher.values();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) norm_sq += x(i, j) * x(i, j);
    CHECK(norm_sq == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("adapter initialization") {
  TrainConfig cfg;
  cfg.dim = 6;
  SECTION("zero corruption gives the identity") {
    cfg.adapter_noise = 0.0;
    const StudentAdapter a = init_adapters(cfg);
    CHECK(testutil::bitwise_equal(a.a_v, DenseMatrix::identity(6)));
    CHECK(testutil::bitwise_equal(a.a_l, DenseMatrix::identity(6)));
  }
  SECTION("seeded and reproducible") {
    const StudentAdapter a = init_adapters(cfg);
    const StudentAdapter b = init_adapters(cfg);
    CHECK(testutil::bitwise_equal(a.a_v, b.a_v));
    CHECK_FALSE(testutil::bitwise_equal(a.a_v, a.a_l));
    CHECK(max_abs_diff(a.a_v, DenseMatrix::identity(6)) > 0.0);
    CHECK(max_abs_diff(a.a_v, DenseMatrix::identity(6)) < 2.0);
  }
}

TEST_CASE("adapter application is a plain linear map") {
  TrainConfig cfg;
  const FeatureBatch x = testutil::random_batch(3, 4, cfg.dim);
  CHECK(testutil::bitwise_equal(
      apply_adapter(x, DenseMatrix::identity(cfg.dim)).values(), x.values()));
}

TEST_CASE("task loss hand values") {
  SECTION("uniform two-way scores cost ln 2") {
    const AlignmentMap map(DenseMatrix(1, 2));
    const TaskLossResult r = task_loss(map, {0});
    CHECK(r.value == Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK(r.d_scores(0, 0) < 0.0);
    CHECK(r.d_scores(0, 1) > 0.0);
  }

  SECTION("confident correct scores cost nearly nothing") {
    const AlignmentMap map(DenseMatrix(1, 2, {100.0, 0.0}));
    CHECK(task_loss(map, {0}).value == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("gradient matches finite differences") {
    const DenseMatrix scores = testutil::random_matrix(17, 4, 3);
    const std::vector<std::size_t> labels{2, 0, 1, 1};
    const TaskLossResult r = task_loss(AlignmentMap(scores), labels);
    const DenseMatrix fd = finite_diff_oracle(
        [&](const DenseMatrix& m) { return task_loss(AlignmentMap(m), labels).value; },
        scores, 1e-6);
    CHECK(max_abs_diff(r.d_scores, fd) <= 1e-5);
  }

  SECTION("label validation") {
    const AlignmentMap map(DenseMatrix(2, 3));
    CHECK_THROWS_AS(task_loss(map, {0}), DimensionError);
    CHECK_THROWS_AS(task_loss(map, std::vector<std::size_t>{0, 3}), InputError);
  }
}
