#pragma once

// Little-endian primitives shared by the feature-dump and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "keynet/error.hpp"

namespace keynet::detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline void write_f32(std::ostream& out, float v) {
  write_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void write_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n,
                       const std::string& what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError("truncated " + what);
  }
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float read_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(read_u32(in, what));
}

inline std::uint8_t read_u8(std::istream& in, const std::string& what) {
  char c;
  read_exact(in, &c, 1, what);
  return static_cast<std::uint8_t>(c);
}

inline void expect_magic(std::istream& in, const char (&magic)[5],
                         const std::string& what) {
  char got[4];
  read_exact(in, got, 4, what);
  if (std::memcmp(got, magic, 4) != 0) {
    throw FormatError(what + ": bad magic, expected " + std::string(magic));
  }
}

}  // namespace keynet::detail
