#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "cdvcs/digest.hpp"

namespace cdvcs {

// Canonical binary encoding primitives. Integers are big-endian, byte strings
// and strings are prefixed by a u32 length, digests are written raw.

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void bytes(std::span<const std::uint8_t> b);
  void str(std::string_view s);
  void digest(const Digest& d) { out_.insert(out_.end(), d.bytes.begin(), d.bytes.end()); }
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

private:
  Bytes out_;
};

/// Reads what Writer wrote. Any truncation or oversized length raises
/// Error(ProtocolError).
class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  Bytes bytes();
  std::string str();
  Digest digest();
  /// A u32 element count, sanity-checked against the remaining input assuming
  /// each element needs at least `min_element_size` bytes.
  std::uint32_t count(std::size_t min_element_size = 1);

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }
  /// Throws unless all input has been consumed.
  void expect_done() const;

private:
  std::span<const std::uint8_t> take(std::size_t n);

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace cdvcs
