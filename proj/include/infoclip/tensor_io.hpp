#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/gram.hpp"
#include "infoclip/matrix.hpp"

namespace infoclip {

// The serialized layout is little-endian by contract; this library memcpy's
// native doubles, so it requires a little-endian host.
static_assert(std::endian::native == std::endian::little,
              "ICTF serialization assumes a little-endian host");

/// In-memory view of one tensor file: dims plus values widened to double.
struct TensorData {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

namespace detail {

inline constexpr char kMagic[4] = {'I', 'C', 'T', 'F'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 1;
inline constexpr std::uint32_t kDtypeF64 = 2;
inline constexpr std::uint32_t kMaxRank = 8;
inline constexpr std::uint64_t kMaxElements = 1ull << 28;

template <typename T>
void append_raw(std::vector<char>& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

/// Write bytes to path.tmp, then atomically rename over path.
inline void write_file_atomic(const std::string& path, const std::vector<char>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open for writing: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError("rename failed: " + tmp + " -> " + path + ": " + ec.message());
}

inline void write_ictf(const std::string& path, const std::vector<std::uint64_t>& dims,
                       const double* values, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i)
    if (!std::isfinite(values[i]))
      throw InputError("write_tensor: non-finite value at flat index " + std::to_string(i));
  std::vector<char> buf;
  buf.reserve(16 + dims.size() * 8 + count * 8);
  buf.insert(buf.end(), kMagic, kMagic + 4);
  append_raw(buf, kVersion);
  append_raw(buf, kDtypeF64);
  append_raw(buf, static_cast<std::uint32_t>(dims.size()));
  for (std::uint64_t d : dims) append_raw(buf, d);
  const char* p = reinterpret_cast<const char*>(values);
  buf.insert(buf.end(), p, p + count * sizeof(double));
  write_file_atomic(path, buf);
}

struct ByteReader {
  const std::vector<char>& bytes;
  std::size_t pos = 0;

  template <typename T>
  T take(const char* what) {
    if (pos + sizeof(T) > bytes.size())
      throw FormatError(std::string("truncated ") + what + " at byte offset " +
                        std::to_string(pos));
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
};

} // namespace detail

/// Parse an ICTF byte buffer. Error messages carry byte offsets: the magic
/// lives at 0, the version at 4, the dtype tag at 8, the rank at 12, dims at
/// 16, the payload after the dims.
inline TensorData parse_tensor(const std::vector<char>& bytes) {
  using namespace detail;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad magic at byte offset 0 (expected \"ICTF\")");
  ByteReader r{bytes, 4};
  const std::uint32_t version = r.take<std::uint32_t>("version");
  if (version != kVersion)
    throw FormatError("unsupported version " + std::to_string(version) + " at byte offset 4");
  const std::uint32_t dtype = r.take<std::uint32_t>("dtype");
  if (dtype != kDtypeF32 && dtype != kDtypeF64)
    throw FormatError("unsupported dtype tag " + std::to_string(dtype) + " at byte offset 8");
  const std::uint32_t rank = r.take<std::uint32_t>("rank");
  if (rank == 0 || rank > kMaxRank)
    throw FormatError("rank " + std::to_string(rank) + " out of range [1, " +
                      std::to_string(kMaxRank) + "] at byte offset 12");

  TensorData t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint64_t d = r.take<std::uint64_t>("dims");
    if (d == 0 || count > kMaxElements / d)
      throw FormatError("dims at byte offset 16 give zero or oversized element count");
    count *= d;
    t.dims.push_back(d);
  }

  const std::size_t elem = dtype == kDtypeF32 ? 4 : 8;
  const std::size_t need = static_cast<std::size_t>(count) * elem;
  const std::size_t have = bytes.size() - r.pos;
  if (have != need)
    throw FormatError("payload at byte offset " + std::to_string(r.pos) + " has " +
                      std::to_string(have) + " bytes, expected " + std::to_string(need));

  t.values.resize(static_cast<std::size_t>(count));
  if (dtype == kDtypeF64) {
    std::memcpy(t.values.data(), bytes.data() + r.pos, need);
  } else {
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      float f;
      std::memcpy(&f, bytes.data() + r.pos + i * 4, 4);
      t.values[i] = static_cast<double>(f);
    }
  }
  return t;
}

inline TensorData read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open tensor file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

/// Rank-2 binary64 tensor. Round-trips bit-exactly.
inline void write_tensor(const std::string& path, const DenseMatrix& m) {
  detail::write_ictf(path, {m.rows(), m.cols()}, m.data().data(), m.size());
}

inline void write_tensor(const std::string& path, const std::vector<double>& v) {
  if (v.empty()) throw InputError("write_tensor: empty vector");
  detail::write_ictf(path, {v.size()}, v.data(), v.size());
}

inline DenseMatrix read_matrix(const std::string& path) {
  TensorData t = read_tensor(path);
  if (t.dims.size() != 2)
    throw FormatError(path + ": expected rank 2, found rank " + std::to_string(t.dims.size()));
  return DenseMatrix(static_cast<std::size_t>(t.dims[0]), static_cast<std::size_t>(t.dims[1]),
                     std::move(t.values));
}

inline std::vector<double> read_vector(const std::string& path) {
  TensorData t = read_tensor(path);
  if (t.dims.size() != 1)
    throw FormatError(path + ": expected rank 1, found rank " + std::to_string(t.dims.size()));
  return std::move(t.values);
}

inline FeatureBatch read_feature_batch(const std::string& path) {
  return FeatureBatch(read_matrix(path));
}

} // namespace infoclip
