#pragma once

// Little-endian fixed-width and LEB128 varint helpers for the on-disk formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "usimrank/error.hpp"

namespace usimrank::io {

template <class UInt>
void put_le(std::string& buf, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) buf.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <class UInt>
UInt get_le(const unsigned char* p) {
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(p[i]) << (8 * i);
  return value;
}

inline void put_f64(std::string& buf, double x) { put_le(buf, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

inline void put_varint(std::string& buf, std::uint64_t value) {
  while (value >= 0x80) {
    buf.push_back(static_cast<char>((value & 0x7f) | 0x80));
    value >>= 7;
  }
  buf.push_back(static_cast<char>(value));
}

inline std::size_t varint_size(std::uint64_t value) {
  std::size_t n = 1;
  while (value >= 0x80) {
    value >>= 7;
    ++n;
  }
  return n;
}

constexpr std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
constexpr std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

/// Reads a varint from a stream; returns false on clean EOF before the first byte.
inline bool read_varint(std::istream& in, std::uint64_t& value) {
  value = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (shift == 0) return false;
      throw Error("truncated varint");
    }
    value |= static_cast<std::uint64_t>(c & 0x7f) << shift;
    if (!(c & 0x80)) return true;
  }
  throw Error("varint too long");
}

inline void read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw Error("truncated record");
}

}  // namespace usimrank::io
