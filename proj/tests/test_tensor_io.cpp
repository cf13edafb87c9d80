#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "helpers.hpp"

using namespace infoclip;

namespace {

std::vector<char> valid_header(std::uint32_t version, std::uint32_t dtype, std::uint32_t rank,
                               const std::vector<std::uint64_t>& dims) {
  std::vector<char> b;
  const char magic[4] = {'I', 'C', 'T', 'F'};
  b.insert(b.end(), magic, magic + 4);
  auto put32 = [&](std::uint32_t v) {
    const char* p = reinterpret_cast<const char*>(&v);
    b.insert(b.end(), p, p + 4);
  };
  auto put64 = [&](std::uint64_t v) {
    const char* p = reinterpret_cast<const char*>(&v);
    b.insert(b.end(), p, p + 8);
  };
  put32(version);
  put32(dtype);
  put32(rank);
  for (std::uint64_t d : dims) put64(d);
  return b;
}

std::string error_text(const std::vector<char>& bytes) {
  try {
    parse_tensor(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

void write_raw(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("tensor files round-trip bit-exactly") {
  const auto path = testutil::scratch_path("roundtrip");
  DenseMatrix m(3, 2, {1.0, -0.0, 1e-308, -2.5, 3.141592653589793, 1e300});
  write_tensor(path.string(), m);
  const DenseMatrix back = read_matrix(path.string());
  CHECK(testutil::bitwise_equal(m, back));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}

TEST_CASE("vector tensors round-trip") {
  const auto path = testutil::scratch_path("vec");
  const std::vector<double> v{0.25, -1.0, 42.0};
  write_tensor(path.string(), v);
  CHECK(read_vector(path.string()) == v);
  const TensorData t = read_tensor(path.string());
  REQUIRE(t.dims.size() == 1);
  CHECK(t.dims[0] == 3);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(write_tensor(path.string(), std::vector<double>{}), InputError);
}

TEST_CASE("non-finite values are refused at write time") {
  DenseMatrix m(2, 2);
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(write_tensor("never_written.ictf", m), InputError);
  CHECK_FALSE(std::filesystem::exists("never_written.ictf"));
}

TEST_CASE("parse errors name the byte offset of the bad field") {
  SECTION("bad magic") {
    std::vector<char> b = valid_header(1, 2, 1, {1});
    b[0] = 'X';
    CHECK(error_text(b).find("offset 0") != std::string::npos);
    CHECK(error_text(std::vector<char>{}).find("offset 0") != std::string::npos);
  }
  SECTION("bad version") {
    const std::vector<char> b = valid_header(9, 2, 1, {1});
    CHECK(error_text(b).find("offset 4") != std::string::npos);
    CHECK(error_text(b).find("version 9") != std::string::npos);
  }
  SECTION("bad dtype") {
    const std::vector<char> b = valid_header(1, 7, 1, {1});
    CHECK(error_text(b).find("offset 8") != std::string::npos);
  }
  SECTION("bad rank") {
    CHECK(error_text(valid_header(1, 2, 0, {})).find("offset 12") != std::string::npos);
    CHECK(error_text(valid_header(1, 2, 9, {1, 1, 1, 1, 1, 1, 1, 1, 1}))
              .find("offset 12") != std::string::npos);
  }
  SECTION("zero dim") {
    const std::vector<char> b = valid_header(1, 2, 2, {2, 0});
    CHECK(error_text(b).find("offset 16") != std::string::npos);
  }
  SECTION("truncated payload") {
    std::vector<char> b = valid_header(1, 2, 2, {2, 3});
    b.resize(b.size() + 5 * 8); // 5 of the 6 required doubles
    const std::string msg = error_text(b);
    CHECK(msg.find("payload") != std::string::npos);
    CHECK(msg.find("48") != std::string::npos);
  }
  SECTION("trailing bytes") {
    std::vector<char> b = valid_header(1, 2, 1, {1});
    b.resize(b.size() + 9); // one double plus a stray byte
    CHECK(error_text(b).find("payload") != std::string::npos);
  }
}

TEST_CASE("binary32 payloads widen to binary64") {
  std::vector<char> b = valid_header(1, 1, 2, {2, 2});
  for (float f : {1.5f, -2.25f, 0.0f, 100.0f}) {
    const char* p = reinterpret_cast<const char*>(&f);
    b.insert(b.end(), p, p + 4);
  }
  const TensorData t = parse_tensor(b);
  CHECK(t.values == std::vector<double>{1.5, -2.25, 0.0, 100.0});

  const auto path = testutil::scratch_path("f32");
  write_raw(path, b);
  const DenseMatrix m = read_matrix(path.string());
  CHECK(m(0, 1) == -2.25);
  std::filesystem::remove(path);
}

TEST_CASE("file-level errors carry the path") {
  try {
    read_tensor("no_such_file.ictf");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("no_such_file.ictf") != std::string::npos);
  }

  const auto path = testutil::scratch_path("badmagic");
  write_raw(path, std::vector<char>{'n', 'o', 'p', 'e'});
  try {
    read_tensor(path.string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(path.string()) != std::string::npos);
    CHECK(msg.find("offset 0") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("rank mismatches are rejected by the typed readers") {
  const auto path = testutil::scratch_path("rank");
  write_tensor(path.string(), std::vector<double>{1.0, 2.0});
  CHECK_THROWS_AS(read_matrix(path.string()), FormatError);
  write_tensor(path.string(), DenseMatrix(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_AS(read_vector(path.string()), FormatError);
  CHECK_NOTHROW(read_feature_batch(path.string()));
  std::filesystem::remove(path);
}

TEST_CASE("alignment checkpoints round-trip bit-exactly") {
  const LpamParams p = lpam_init(5, 99);
  const auto path = testutil::scratch_path("lpam_ckpt");
  save_lpam(path.string(), p);
  const LpamParams q = load_lpam(path.string());
  CHECK(q.d == p.d);
  CHECK(q.eps == p.eps);
  CHECK(testutil::bitwise_equal(q.wq, p.wq));
  CHECK(testutil::bitwise_equal(q.wk, p.wk));
  CHECK(q.ln_v_gain == p.ln_v_gain);
  CHECK(q.ln_l_bias == p.ln_l_bias);
  std::filesystem::remove(path);
}

TEST_CASE("adapter checkpoints round-trip bit-exactly") {
  TrainConfig cfg;
  cfg.dim = 6;
  const StudentAdapter a = init_adapters(cfg);
  const auto path = testutil::scratch_path("adapter_ckpt");
  save_adapters(path.string(), a);
  const StudentAdapter b = load_adapters(path.string());
  CHECK(testutil::bitwise_equal(a.a_v, b.a_v));
  CHECK(testutil::bitwise_equal(a.a_l, b.a_l));
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected with a clear error") {
  const auto path = testutil::scratch_path("bad_ckpt");
  write_tensor(path.string(), std::vector<double>{5.0, 1e-5, 0.1}); // far too short
  CHECK_THROWS_AS(load_lpam(path.string()), FormatError);
  write_tensor(path.string(), std::vector<double>{-3.0, 1e-5});
  CHECK_THROWS_AS(load_lpam(path.string()), FormatError);
  write_tensor(path.string(), std::vector<double>{2.5, 0.0, 0.0});
  CHECK_THROWS_AS(load_adapters(path.string()), FormatError);
  std::filesystem::remove(path);
}
