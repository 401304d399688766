#include "cdvcs/digest.hpp"

#include <memory>

#include <openssl/evp.h>

#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string Digest::hex() const { return short_hex(kSize * 2); }

std::string Digest::short_hex(std::size_t n) const {
  std::string out;
  out.reserve(n);
  for (std::size_t i = 0; i < n && i / 2 < kSize; ++i) {
    const std::uint8_t b = bytes[i / 2];
    out.push_back(kHexDigits[(i % 2 == 0) ? (b >> 4) : (b & 0x0f)]);
  }
  return out;
}

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != kSize * 2) throw Error(ErrorCode::ProtocolError, "digest hex must be 64 characters");
  Digest d;
  for (std::size_t i = 0; i < kSize; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::ProtocolError, "invalid hex digit in digest");
    d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return d;
}

Digest sha256(std::span<const std::uint8_t> data) {
  // Fetching the algorithm is the expensive part of a one-shot digest.
  static EVP_MD* const md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  thread_local const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  Digest d;
  unsigned int len = 0;
  if (!md || !ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), d.bytes.data(), &len) != 1 || len != Digest::kSize) {
    throw Error(ErrorCode::StorageError, "sha256 failed");
  }
  return d;
}

Digest sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

}  // namespace cdvcs
