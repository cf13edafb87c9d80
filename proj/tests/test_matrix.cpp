#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace infoclip;
using testutil::bitwise_equal;
using testutil::random_matrix;

TEST_CASE("dense matrix shape validation") {
  CHECK_THROWS_AS(DenseMatrix(0, 3), DimensionError);
  CHECK_THROWS_AS(DenseMatrix(3, 0), DimensionError);
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  const DenseMatrix m(2, 3);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  for (double v : m.data()) CHECK(v == 0.0);
}

TEST_CASE("hadamard product") {
  const DenseMatrix i4 = DenseMatrix::identity(4);
  CHECK(bitwise_equal(hadamard(i4, i4), i4));

  const DenseMatrix a(2, 2, {1, 2, 3, 4});
  const DenseMatrix b(2, 2, {2, 0, 0, 2});
  const DenseMatrix ab = hadamard(a, b);
  CHECK(ab(0, 0) == 2.0);
  CHECK(ab(0, 1) == 0.0);
  CHECK(ab(1, 0) == 0.0);
  CHECK(ab(1, 1) == 8.0);

  const DenseMatrix zero(2, 2);
  CHECK(testutil::all_zero(hadamard(a, zero)));

  const DenseMatrix r1 = random_matrix(11, 5, 4);
  const DenseMatrix r2 = random_matrix(12, 5, 4);
  CHECK(bitwise_equal(hadamard(r1, r2), hadamard(r2, r1)));

  CHECK_THROWS_AS(hadamard(a, DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("squared frobenius norm") {
  DenseMatrix quarter = DenseMatrix::identity(4);
  for (double& v : quarter.data()) v *= 0.25;
  CHECK(frobenius_sq(quarter) == 0.25);

  DenseMatrix third(3, 3);
  for (double& v : third.data()) v = 1.0 / 3.0;
  CHECK(frobenius_sq(third) == Catch::Approx(1.0).margin(1e-12));

  CHECK(frobenius_sq(DenseMatrix(3, 3)) == 0.0);
}

TEST_CASE("trace normalization") {
  const DenseMatrix a(2, 2, {2, 1, 1, 2});
  const DenseMatrix t = trace_normalize(a);
  CHECK(t(0, 0) == 0.5);
  CHECK(t(0, 1) == 0.25);
  CHECK(t(1, 0) == 0.25);
  CHECK(t(1, 1) == 0.5);

  const DenseMatrix i4 = trace_normalize(DenseMatrix::identity(4));
  for (std::size_t i = 0; i < 4; ++i) CHECK(i4(i, i) == 0.25);

  SECTION("result has unit trace") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      DenseMatrix m = random_matrix(100 + s, 6, 6);
      // shift the diagonal up so the trace is safely positive
      for (std::size_t i = 0; i < 6; ++i) m(i, i) = std::abs(m(i, i)) + 1.0;
      CHECK(trace(trace_normalize(m)) == Catch::Approx(1.0).margin(1e-12));
    }
  }

  SECTION("non-positive trace is rejected") {
    CHECK_THROWS_AS(trace_normalize(DenseMatrix(2, 2)), DegenerateError);
    CHECK_THROWS_AS(trace_normalize(DenseMatrix(2, 2, {-1, 0, 0, 0})), DegenerateError);
  }

  CHECK_THROWS_AS(trace_normalize(DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("matrix products agree with hand values and each other") {
  const DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  const DenseMatrix b(3, 2, {7, 8, 9, 10, 11, 12});
  const DenseMatrix c = matmul(a, b);
  CHECK(c(0, 0) == 58.0);
  CHECK(c(0, 1) == 64.0);
  CHECK(c(1, 0) == 139.0);
  CHECK(c(1, 1) == 154.0);

  const DenseMatrix x = random_matrix(21, 4, 6);
  const DenseMatrix y = random_matrix(22, 5, 6);
  CHECK(bitwise_equal(matmul_nt(x, y), matmul(x, transpose(y))));
  const DenseMatrix z = random_matrix(23, 4, 5);
  CHECK(bitwise_equal(matmul_tn(x, z), matmul(transpose(x), z)));

  CHECK_THROWS_AS(matmul(a, DenseMatrix(2, 2)), DimensionError);
}

TEST_CASE("row normalization produces unit rows") {
  DenseMatrix m(3, 2, {3, 4, 0, 2, -1, 0});
  const DenseMatrix u = row_l2_normalize(m);
  CHECK(u(0, 0) == Catch::Approx(0.6).margin(1e-15));
  CHECK(u(0, 1) == Catch::Approx(0.8).margin(1e-15));
  CHECK(u(1, 1) == 1.0);
  CHECK(u(2, 0) == -1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 2; ++j) s += u(i, j) * u(i, j);
    CHECK(s == Catch::Approx(1.0).margin(1e-12));
  }

  CHECK_THROWS_AS(row_l2_normalize(DenseMatrix(2, 2, {1, 1, 0, 0})), DegenerateError);
}

TEST_CASE("small matrix utilities") {
  const DenseMatrix a(2, 2, {1, 2, 3, 4});
  CHECK(trace(a) == 5.0);
  CHECK(inner(a, a) == 30.0);

  DenseMatrix acc = a;
  add_scaled(acc, 2.0, DenseMatrix::identity(2));
  CHECK(acc(0, 0) == 3.0);
  CHECK(acc(1, 1) == 6.0);
  CHECK(acc(0, 1) == 2.0);

  const DenseMatrix s = scaled(a, -1.0);
  CHECK(s(1, 0) == -3.0);

  CHECK(max_abs_diff(a, s) == 8.0);
  CHECK(max_abs_diff(a, a) == 0.0);

  DenseMatrix nonfinite(2, 2);
  nonfinite(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(nonfinite.all_finite());
  CHECK(a.all_finite());
}

TEST_CASE("feature batch validation") {
  CHECK_THROWS_AS(FeatureBatch(DenseMatrix(1, 3, {1, 2, 3})), InputError);
  DenseMatrix bad(2, 2, {1, 2, 3, 4});
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(FeatureBatch(bad), InputError);
  const FeatureBatch ok(DenseMatrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(ok.samples() == 2);
  CHECK(ok.dim() == 3);
}
