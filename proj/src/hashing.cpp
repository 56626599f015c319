#include "lund/util/hashing.hpp"

#include <zlib.h>

#include <cstdio>
#include <stdexcept>

namespace lund {

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t from_hex(std::string_view hex) {
  if (hex.empty() || hex.size() > 16) {
    throw std::invalid_argument("bad hex value: " + std::string(hex));
  }
  std::uint64_t v = 0;
  for (char c : hex) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      v |= static_cast<std::uint64_t>(c - 'A' + 10);
    } else {
      throw std::invalid_argument("bad hex value: " + std::string(hex));
    }
  }
  return v;
}

std::uint32_t crc32(std::span<const unsigned char> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t off = 0;
  while (off < data.size()) {
    const std::size_t chunk = std::min<std::size_t>(data.size() - off, 1u << 30);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32(std::string_view data) {
  return crc32(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(data.data()), data.size()));
}

}  // namespace lund
