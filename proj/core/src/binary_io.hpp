#pragma once

// Little-endian primitives shared by the QTFW and QDTA codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "quattro/io.hpp"
#include "quattro/types.hpp"

namespace quattro::detail {

class ByteWriter {
 public:
  void raw(std::string_view bytes) { out_.append(bytes); }

  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

/// Bounds-checked reader. `context` callbacks produce the field name used in
/// truncation errors.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : in_(bytes) {}

  size_t remaining() const { return in_.size() - pos_; }
  size_t position() const { return pos_; }

  std::string_view raw(size_t n, const std::string& what) {
    need(n, what);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }

  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(static_cast<unsigned char>(in_[pos_ + size_t(i)])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const std::string& what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= std::uint64_t(static_cast<unsigned char>(in_[pos_ + size_t(i)])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32(const std::string& what) { return std::bit_cast<float>(u32(what)); }

 private:
  void need(size_t n, const std::string& what) const {
    if (remaining() < n) throw FormatError("unexpected end of file in " + what);
  }

  std::string_view in_;
  size_t pos_ = 0;
};

}  // namespace quattro::detail
