#include "forge/hash.hpp"

#include <bit>
#include <cstring>

#define XXH_INLINE_ALL
#include "xxhash.h"

#include "forge/error.hpp"

namespace forge {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string Fingerprint::hex() const {
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    out[15 - i] = kHexDigits[(hi >> (4 * i)) & 0xF];
    out[31 - i] = kHexDigits[(lo >> (4 * i)) & 0xF];
  }
  return out;
}

Fingerprint Fingerprint::from_hex(std::string_view hex) {
  if (hex.size() != 32) throw ParseError("fingerprint must be 32 hex digits");
  Fingerprint fp;
  for (std::size_t i = 0; i < 32; ++i) {
    int v = hex_value(hex[i]);
    if (v < 0) throw ParseError("invalid hex digit in fingerprint");
    auto& word = i < 16 ? fp.hi : fp.lo;
    word = (word << 4) | static_cast<std::uint64_t>(v);
  }
  return fp;
}

std::array<std::uint8_t, 16> Fingerprint::bytes() const {
  std::array<std::uint8_t, 16> out{};
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    out[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
  }
  return out;
}

Fingerprint Fingerprint::from_bytes(std::span<const std::uint8_t, 16> bytes) {
  Fingerprint fp;
  for (int i = 0; i < 8; ++i) {
    fp.hi = (fp.hi << 8) | bytes[i];
    fp.lo = (fp.lo << 8) | bytes[8 + i];
  }
  return fp;
}

std::uint64_t hash64(std::string_view bytes, std::uint64_t seed) {
  return XXH3_64bits_withSeed(bytes.data(), bytes.size(), seed);
}

Fingerprint hash128(std::string_view bytes) {
  XXH128_hash_t h = XXH3_128bits(bytes.data(), bytes.size());
  return {h.high64, h.low64};
}

struct Hasher::State {
  XXH3_state_t xxh;
};

Hasher::Hasher() : state_(std::make_unique<State>()) { XXH3_128bits_reset(&state_->xxh); }
Hasher::~Hasher() = default;
Hasher::Hasher(Hasher&&) noexcept = default;
Hasher& Hasher::operator=(Hasher&&) noexcept = default;

Hasher& Hasher::update_u64(std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  XXH3_128bits_update(&state_->xxh, buf, sizeof buf);
  return *this;
}

Hasher& Hasher::update_bytes(std::string_view bytes) {
  update_u64(bytes.size());
  XXH3_128bits_update(&state_->xxh, bytes.data(), bytes.size());
  return *this;
}

Hasher& Hasher::update_f64(double v) { return update_u64(std::bit_cast<std::uint64_t>(v)); }

Hasher& Hasher::update(const Fingerprint& fp) {
  update_u64(fp.hi);
  return update_u64(fp.lo);
}

Fingerprint Hasher::digest() const {
  XXH128_hash_t h = XXH3_128bits_digest(&state_->xxh);
  return {h.high64, h.low64};
}

}  // namespace forge
