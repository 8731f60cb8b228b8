// Copyright 2026 The Dysolve Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <boost/crc.hpp>

#include "dysolve/dyson.hpp"
#include "dysolve/io.hpp"

namespace dysolve {

namespace {

constexpr char kCacheMagic[4] = {'D', 'Y', 'S', 'N'};
constexpr char kMatrixMagic[4] = {'D', 'Y', 'S', 'U'};
constexpr std::uint32_t kMatrixFormatVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <class T>
  void le(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<unsigned char>(u >> (8 * i)));
  }
  void matrix(const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        le(m(r, c).real());
        le(m(r, c).imag());
      }
    }
  }
  void finish() {
    boost::crc_32_type crc;
    crc.process_bytes(buf_.data(), buf_.size());
    le(static_cast<std::uint32_t>(crc.checksum()));
  }
  const std::vector<unsigned char>& data() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> data) : data_(data) {}

  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(u);
  }
  Matrix matrix(std::size_t rows, std::size_t cols) {
    need(rows * cols * 16);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double re = le<double>();
        const double im = le<double>();
        m(r, c) = {re, im};
      }
    }
    return m;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorKind::CorruptCache, "unexpected end of file");
  }
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Validates magic and trailing CRC; returns the payload without the trailer.
std::span<const unsigned char> checked_payload(const std::vector<unsigned char>& file, const char (&magic)[4]) {
  if (file.size() < 12 || std::memcmp(file.data(), magic, 4) != 0) {
    throw Error(ErrorKind::CorruptCache, "bad magic or truncated file");
  }
  const std::size_t body = file.size() - 4;
  std::uint32_t stored = 0;
  for (std::size_t i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(file[body + i]) << (8 * i);
  boost::crc_32_type crc;
  crc.process_bytes(file.data(), body);
  if (crc.checksum() != stored) throw Error(ErrorKind::CorruptCache, "checksum mismatch");
  return {file.data() + 4, body - 4};
}

void write_assignment(Writer& w, const FrequencyAssignment& a) {
  w.le(static_cast<std::uint32_t>(a.order()));
  for (std::size_t p = 0; p < a.order(); ++p) {
    w.le(a.channels[p]);
    w.le(static_cast<std::int32_t>(a.signs[p]));
  }
}

FrequencyAssignment read_assignment(Reader& r, std::size_t max_order, std::size_t q) {
  const auto m = r.le<std::uint32_t>();
  if (m > max_order) throw Error(ErrorKind::CorruptCache, "entry order exceeds truncation order");
  FrequencyAssignment a;
  for (std::uint32_t p = 0; p < m; ++p) {
    const auto ch = r.le<std::uint32_t>();
    const auto sign = r.le<std::int32_t>();
    if (ch >= q || (sign != 1 && sign != -1)) throw Error(ErrorKind::CorruptCache, "invalid assignment");
    a.channels.push_back(ch);
    a.signs.push_back(sign);
  }
  return a;
}

}  // namespace

void save_cache(const DysonCache& cache, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kCacheMagic, 4);
  w.le(kCacheFormatVersion);
  w.le(static_cast<std::uint32_t>(cache.dim));
  w.le(static_cast<std::uint32_t>(cache.truncation_order));
  w.le(static_cast<std::uint32_t>(cache.num_channels()));
  w.le(static_cast<std::uint32_t>(cache.has_slopes() ? 1 : 0));
  w.le(cache.subpixel_width);
  w.le(cache.system_fingerprint);
  for (double c : cache.carriers) w.le(c);
  w.le(static_cast<std::uint64_t>(cache.entries.size()));
  for (const auto& e : cache.entries) {
    write_assignment(w, e.assignment);
    w.matrix(e.op);
  }
  w.le(static_cast<std::uint64_t>(cache.slope_entries.size()));
  for (const auto& e : cache.slope_entries) {
    write_assignment(w, e.assignment);
    w.le(e.position);
    w.matrix(e.op);
  }
  w.finish();
  write_file_atomic(path, w.data());
}

DysonCache load_cache(const std::filesystem::path& path) {
  const auto file = read_file(path);
  Reader r(checked_payload(file, kCacheMagic));
  const auto version = r.le<std::uint32_t>();
  if (version != kCacheFormatVersion) {
    throw Error(ErrorKind::VersionMismatch,
                "cache format " + std::to_string(version) + ", expected " + std::to_string(kCacheFormatVersion));
  }
  DysonCache cache;
  cache.dim = r.le<std::uint32_t>();
  cache.truncation_order = r.le<std::uint32_t>();
  const std::size_t q = r.le<std::uint32_t>();
  const bool with_slopes = r.le<std::uint32_t>() != 0;
  cache.subpixel_width = r.le<double>();
  cache.system_fingerprint = r.le<std::uint64_t>();
  if (cache.truncation_order > kMaxTruncationOrder || q > 1024) throw Error(ErrorKind::CorruptCache, "bad header");
  for (std::size_t c = 0; c < q; ++c) cache.carriers.push_back(r.le<double>());

  const auto count = r.le<std::uint64_t>();
  if (count != expected_entry_count(cache.truncation_order, q)) {
    throw Error(ErrorKind::CorruptCache, "entry count does not match header");
  }
  cache.entries.resize(count);
  for (auto& e : cache.entries) {
    e.assignment = read_assignment(r, cache.truncation_order, q);
    e.op = r.matrix(cache.dim, cache.dim);
  }
  const auto slope_count = r.le<std::uint64_t>();
  if (slope_count != (with_slopes ? expected_slope_entry_count(cache.truncation_order, q) : 0)) {
    throw Error(ErrorKind::CorruptCache, "slope entry count does not match header");
  }
  cache.slope_entries.resize(slope_count);
  for (auto& e : cache.slope_entries) {
    e.assignment = read_assignment(r, cache.truncation_order, q);
    e.position = r.le<std::uint32_t>();
    if (e.position >= e.assignment.order()) throw Error(ErrorKind::CorruptCache, "bad slope position");
    e.op = r.matrix(cache.dim, cache.dim);
  }
  if (!r.done()) throw Error(ErrorKind::CorruptCache, "trailing bytes");
  return cache;
}

DysonCache load_cache(const std::filesystem::path& path, const SystemModel& model) {
  auto cache = load_cache(path);
  check_fingerprint(cache, model);
  return cache;
}

std::uint32_t stored_checksum(const std::filesystem::path& path) {
  const auto file = read_file(path);
  if (file.size() < 4) throw Error(ErrorKind::CorruptCache, "file too short");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(file[file.size() - 4 + i]) << (8 * i);
  return v;
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMatrixMagic, 4);
  w.le(kMatrixFormatVersion);
  w.le(static_cast<std::uint32_t>(m.rows()));
  w.le(static_cast<std::uint32_t>(m.cols()));
  w.matrix(m);
  w.finish();
  write_file_atomic(path, w.data());
}

Matrix load_matrix(const std::filesystem::path& path) {
  const auto file = read_file(path);
  Reader r(checked_payload(file, kMatrixMagic));
  const auto version = r.le<std::uint32_t>();
  if (version != kMatrixFormatVersion) throw Error(ErrorKind::VersionMismatch, "matrix file version");
  const auto rows = r.le<std::uint32_t>();
  const auto cols = r.le<std::uint32_t>();
  Matrix m = r.matrix(rows, cols);
  if (!r.done()) throw Error(ErrorKind::CorruptCache, "trailing bytes");
  return m;
}

}  // namespace dysolve
