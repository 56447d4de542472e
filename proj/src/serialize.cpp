#include "aefenet/serialize.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>

namespace aefenet::io {

static_assert(std::endian::native == std::endian::little, "model files assume little-endian");

namespace {
// Guards allocation against corrupt length fields.
constexpr std::uint64_t kMaxElements = 1ULL << 32;
}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  buffer_.append(b, 4);
}

void ByteWriter::u64(std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buffer_.append(b, 8);
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u64(s.size());
  buffer_.append(s);
}

void ByteWriter::vec(const Vector& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) f64(v(i));
}

void ByteWriter::mat(const Matrix& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  // Row-major on disk.
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
}

void ByteReader::need(std::size_t n) const {
  if (n > remaining()) throw FormatError("model file truncated");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, data_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, data_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const auto n = u64();
  need(n);
  std::string s(data_.substr(pos_, n));
  pos_ += n;
  return s;
}

std::string_view ByteReader::raw(std::size_t n) {
  need(n);
  auto s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

Vector ByteReader::vec() {
  const auto n = u64();
  if (n > kMaxElements) throw FormatError("vector length out of range");
  need(n * 8);
  Vector v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v(i) = f64();
  return v;
}

Matrix ByteReader::mat() {
  const auto r = u64();
  const auto c = u64();
  if (r > kMaxElements || c > kMaxElements || (c != 0 && r > kMaxElements / c)) {
    throw FormatError("matrix shape out of range");
  }
  need(r * c * 8);
  Matrix m(static_cast<Index>(r), static_cast<Index>(c));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
  }
  return m;
}

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace aefenet::io
