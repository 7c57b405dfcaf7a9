#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace forge {

/// 128-bit content digest. Identifies datasets, operator configurations and
/// cache entries.
struct Fingerprint {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
  friend auto operator<=>(const Fingerprint&, const Fingerprint&) = default;

  std::string hex() const;
  static Fingerprint from_hex(std::string_view hex);
  std::array<std::uint8_t, 16> bytes() const;
  static Fingerprint from_bytes(std::span<const std::uint8_t, 16> bytes);
};

std::uint64_t hash64(std::string_view bytes, std::uint64_t seed = 0);
Fingerprint hash128(std::string_view bytes);

/// Streaming 128-bit hasher. Every `update_*` call is length-framed so that
/// ("ab","c") and ("a","bc") produce different digests.
class Hasher {
 public:
  Hasher();
  ~Hasher();
  Hasher(Hasher&&) noexcept;
  Hasher& operator=(Hasher&&) noexcept;
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& update_bytes(std::string_view bytes);
  Hasher& update_u64(std::uint64_t v);
  Hasher& update_f64(double v);
  Hasher& update(const Fingerprint& fp);
  Fingerprint digest() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace forge
