#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include "fedff/errors.hpp"

namespace fedff::bytes {

// Little-endian scalar packing shared by the checkpoint and update codecs.

inline void put_u16(std::string& buf, std::uint16_t x) {
  buf.push_back(static_cast<char>(x & 0xff));
  buf.push_back(static_cast<char>((x >> 8) & 0xff));
}

inline void put_u32(std::string& buf, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof(bits));
  put_u64(buf, bits);
}

struct Reader {
  const unsigned char* p = nullptr;
  std::size_t n = 0;
  std::size_t off = 0;

  void need(std::size_t k) const {
    if (off + k > n) throw MalformedFrame("byte stream truncated");
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t x = static_cast<std::uint16_t>(p[off] | (p[off + 1] << 8));
    off += 2;
    return x;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(p[off + i]) << (8 * i);
    off += 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p[off + i]) << (8 * i);
    off += 8;
    return x;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double x;
    std::memcpy(&x, &bits, sizeof(x));
    return x;
  }
};

}  // namespace fedff::bytes
