#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace infoclip;

namespace {
constexpr Kernel kLinear = Kernel::PolynomialDegree1;
}

TEST_CASE("trace-mode gram of canonical batches") {
  SECTION("orthonormal rows give identity over n") {
    const GramMatrix g = gram_from_features(testutil::orthonormal_batch(4), kLinear,
                                            NormalizationMode::Trace);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(g.matrix()(i, j) == (i == j ? 0.25 : 0.0));
  }

  SECTION("identical unit rows give the constant matrix") {
    const GramMatrix g =
        gram_from_features(testutil::constant_batch(3), kLinear, NormalizationMode::Trace);
    for (double v : g.matrix().data()) CHECK(v == 1.0 / 3.0);
  }

  SECTION("two-block batch") {
    const FeatureBatch x(DenseMatrix(3, 2, {1, 0, 0, 1, 1, 0}));
    const GramMatrix g = gram_from_features(x, kLinear, NormalizationMode::Trace);
    const DenseMatrix expected(3, 3,
                               {1.0 / 3, 0, 1.0 / 3, 0, 1.0 / 3, 0, 1.0 / 3, 0, 1.0 / 3});
    CHECK(testutil::bitwise_equal(g.matrix(), expected));
  }
}

TEST_CASE("diagonal-mode gram") {
  SECTION("per-row scaling ignores row magnitudes") {
    const FeatureBatch x(DenseMatrix(2, 2, {2, 0, 0, 3}));
    const GramMatrix g = gram_from_features(x, kLinear, NormalizationMode::Diagonal);
    CHECK(g.matrix()(0, 0) == 0.5);
    CHECK(g.matrix()(1, 1) == 0.5);
    CHECK(g.matrix()(0, 1) == 0.0);
  }

  SECTION("diagonal entries are exactly 1/n") {
    const FeatureBatch x = testutil::random_batch(5, 6, 4);
    const GramMatrix g = gram_from_features(x, kLinear, NormalizationMode::Diagonal);
    for (std::size_t i = 0; i < 6; ++i)
      CHECK(g.matrix()(i, i) == Catch::Approx(1.0 / 6.0).margin(1e-15));
  }

  SECTION("modes disagree when row norms differ") {
    const FeatureBatch x(DenseMatrix(2, 2, {1, 0, 0, 2}));
    const GramMatrix gt = gram_from_features(x, kLinear, NormalizationMode::Trace);
    const GramMatrix gd = gram_from_features(x, kLinear, NormalizationMode::Diagonal);
    CHECK(gt.matrix()(0, 0) == Catch::Approx(0.2).margin(1e-15));
    CHECK(gt.matrix()(1, 1) == Catch::Approx(0.8).margin(1e-15));
    CHECK(gd.matrix()(0, 0) == 0.5);
    CHECK(max_abs_diff(gt.matrix(), gd.matrix()) > 0.1);
  }
}

TEST_CASE("gram invariants over random batches") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 2 + static_cast<std::size_t>(s % 7);
    const FeatureBatch x = testutil::random_batch(400 + s, n, 3 + s % 5);
    const GramMatrix g = gram_from_features(x, kLinear, NormalizationMode::Trace);
    CHECK(trace(g.matrix()) == Catch::Approx(1.0).margin(1e-12));
    const SpectralResult r = sym_eigenvalues(g.matrix());
    for (double lambda : r.eigenvalues) CHECK(lambda >= -1e-10);
  }
}

TEST_CASE("gram scale invariance") {
  const FeatureBatch x = testutil::random_batch(9, 5, 4);
  for (double c : {1e-3, 1.0, 1e3}) {
    DenseMatrix m = x.values();
    for (double& v : m.data()) v *= c;
    const GramMatrix g = gram_from_features(FeatureBatch(m), kLinear, NormalizationMode::Trace);
    const GramMatrix ref = gram_from_features(x, kLinear, NormalizationMode::Trace);
    CHECK(max_abs_diff(g.matrix(), ref.matrix()) <= 1e-12);
  }
}

TEST_CASE("gram rejects degenerate batches") {
  CHECK_THROWS_AS(gram_from_features(FeatureBatch(DenseMatrix(3, 2)), kLinear,
                                     NormalizationMode::Trace),
                  DegenerateError);
  // one zero row: trace mode tolerates it, diagonal mode cannot
  const FeatureBatch with_zero(DenseMatrix(2, 2, {1, 0, 0, 0}));
  CHECK_NOTHROW(gram_from_features(with_zero, kLinear, NormalizationMode::Trace));
  CHECK_THROWS_AS(gram_from_features(with_zero, kLinear, NormalizationMode::Diagonal),
                  DegenerateError);
}

TEST_CASE("gram matrix wrapper validates its invariants") {
  CHECK_THROWS_AS(GramMatrix::from_matrix(DenseMatrix(2, 2, {0.5, 0.3, 0.1, 0.5}),
                                          NormalizationMode::Trace),
                  InputError);
  CHECK_THROWS_AS(GramMatrix::from_matrix(DenseMatrix(2, 2, {0.9, 0.0, 0.0, 0.9}),
                                          NormalizationMode::Trace),
                  InputError);
  CHECK_THROWS_AS(GramMatrix::from_matrix(DenseMatrix(2, 2, {0.9, 0.0, 0.0, 0.1}),
                                          NormalizationMode::Diagonal),
                  InputError);
  CHECK_NOTHROW(GramMatrix::from_matrix(DenseMatrix(2, 2, {0.5, 0.1, 0.1, 0.5}),
                                        NormalizationMode::Trace));
}
