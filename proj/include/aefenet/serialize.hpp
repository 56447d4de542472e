#pragma once

#include "aefenet/common.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace aefenet::io {

/// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(std::string_view s);
  void raw(std::string_view bytes) { buffer_.append(bytes); }
  void vec(const Vector& v);
  void mat(const Matrix& m);

  const std::string& bytes() const { return buffer_; }

 private:
  std::string buffer_;
};

/// Bounds-checked reader over a byte buffer; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  std::string_view raw(std::size_t n);
  Vector vec();
  Matrix mat();

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::string_view bytes);

}  // namespace aefenet::io
