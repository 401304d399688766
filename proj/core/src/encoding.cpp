#include "cdvcs/encoding.hpp"

#include "cdvcs/error.hpp"

namespace cdvcs {

void Writer::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void Writer::bytes(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void Writer::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  if (n > remaining()) throw Error(ErrorCode::ProtocolError, "truncated input");
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }

std::uint32_t Reader::u32() {
  auto s = take(4);
  return (std::uint32_t{s[0]} << 24) | (std::uint32_t{s[1]} << 16) | (std::uint32_t{s[2]} << 8) | s[3];
}

std::uint64_t Reader::u64() {
  auto s = take(8);
  std::uint64_t v = 0;
  for (auto b : s) v = (v << 8) | b;
  return v;
}

Bytes Reader::bytes() {
  const auto n = u32();
  auto s = take(n);
  return Bytes(s.begin(), s.end());
}

std::string Reader::str() {
  const auto n = u32();
  auto s = take(n);
  return std::string(s.begin(), s.end());
}

Digest Reader::digest() {
  auto s = take(Digest::kSize);
  Digest d;
  std::copy(s.begin(), s.end(), d.bytes.begin());
  return d;
}

std::uint32_t Reader::count(std::size_t min_element_size) {
  const auto n = u32();
  if (min_element_size > 0 && n > remaining() / min_element_size) {
    throw Error(ErrorCode::ProtocolError, "element count exceeds input size");
  }
  return n;
}

void Reader::expect_done() const {
  if (!done()) throw Error(ErrorCode::ProtocolError, "trailing bytes after message");
}

}  // namespace cdvcs
