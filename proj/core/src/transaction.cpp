#include "cdvcs/transaction.hpp"

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {
constexpr std::uint8_t kTxnTag = 0x54;  // 'T'
}

Bytes Transaction::encode() const {
  Writer w;
  w.u8(kTxnTag);
  w.str(op);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [k, v] : params) {
    w.str(k);
    w.str(v);
  }
  return std::move(w).take();
}

Transaction Transaction::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kTxnTag) throw Error(ErrorCode::ProtocolError, "not a transaction");
  Transaction t;
  t.op = r.str();
  for (auto n = r.count(8); n > 0; --n) {
    auto k = r.str();
    t.params[std::move(k)] = r.str();
  }
  r.expect_done();
  return t;
}

}  // namespace cdvcs
