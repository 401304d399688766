#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdvcs {

using Bytes = std::vector<std::uint8_t>;

/// A 256-bit content digest. Ordering is lexicographic over the raw bytes,
/// which is also the order of the lowercase hex rendering.
struct Digest {
  static constexpr std::size_t kSize = 32;
  std::array<std::uint8_t, kSize> bytes{};

  auto operator<=>(const Digest&) const = default;
  bool operator==(const Digest&) const = default;

  std::string hex() const;
  /// First `n` hex characters, for log lines.
  std::string short_hex(std::size_t n = 8) const;

  /// Throws Error(ProtocolError) unless `hex` is 64 lowercase/uppercase hex digits.
  static Digest from_hex(std::string_view hex);
};

/// SHA-256 over raw bytes.
Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

// Commits and stored values share one address space: a commit id is the
// digest of the commit's canonical encoding, which is also its store key.
using CommitId = Digest;
using HashRef = Digest;

struct DigestHash {
  std::size_t operator()(const Digest& d) const noexcept {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) h = (h << 8) | d.bytes[i];
    return h;
  }
};

}  // namespace cdvcs
