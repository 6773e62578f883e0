#pragma once

// Little-endian primitive encoding shared by the model and dataset formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace zggp::binio {

template <typename T>
  requires std::is_integral_v<T>
void write_int(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(buf, sizeof(T));
}

inline void write_f32(std::ostream& out, float value) {
  write_int(out, std::bit_cast<std::uint32_t>(value));
}

// Length-prefixed (u16) string.
inline void write_short_string(std::ostream& out, const std::string& s) {
  write_int(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

// Readers return false on truncation; the caller maps that to its own error.
template <typename T>
  requires std::is_integral_v<T>
bool read_int(std::istream& in, T& value) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
  std::make_unsigned_t<T> bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
  }
  value = static_cast<T>(bits);
  return true;
}

inline bool read_f32(std::istream& in, float& value) {
  std::uint32_t bits = 0;
  if (!read_int(in, bits)) return false;
  value = std::bit_cast<float>(bits);
  return true;
}

inline bool read_short_string(std::istream& in, std::string& s) {
  std::uint16_t len = 0;
  if (!read_int(in, len)) return false;
  s.resize(len);
  return len == 0 || static_cast<bool>(in.read(s.data(), len));
}

inline bool read_magic(std::istream& in, const char (&magic)[9]) {
  char buf[8];
  if (!in.read(buf, 8)) return false;
  return std::memcmp(buf, magic, 8) == 0;
}

}  // namespace zggp::binio
