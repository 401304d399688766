#include "cdvcs/crdt.hpp"

#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {

constexpr std::uint8_t kCdvcsType = 1;
constexpr std::uint8_t kOrSetType = 2;

template <typename T>
Bytes tagged(std::uint8_t type, const T& value) {
  Bytes out{type};
  auto body = value.encode();
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::uint8_t type_of(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error(ErrorCode::ProtocolError, "empty CRDT payload");
  return bytes[0];
}

}  // namespace

Bytes encode_state(const CrdtState& state) {
  return std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        return tagged(std::is_same_v<S, CdvcsState> ? kCdvcsType : kOrSetType, s);
      },
      state);
}

CrdtState decode_state(std::span<const std::uint8_t> bytes) {
  switch (type_of(bytes)) {
    case kCdvcsType: return CdvcsState::decode(bytes.subspan(1));
    case kOrSetType: return OrSetState::decode(bytes.subspan(1));
  }
  throw Error(ErrorCode::ProtocolError, "unknown CRDT type");
}

Bytes encode_delta(const CrdtDelta& delta) {
  return std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        return tagged(std::is_same_v<D, DownstreamOp> ? kCdvcsType : kOrSetType, d);
      },
      delta);
}

CrdtDelta decode_delta(std::span<const std::uint8_t> bytes) {
  switch (type_of(bytes)) {
    case kCdvcsType: return DownstreamOp::decode(bytes.subspan(1));
    case kOrSetType: return OrSetDelta::decode(bytes.subspan(1));
  }
  throw Error(ErrorCode::ProtocolError, "unknown CRDT type");
}

bool apply_delta(CrdtState& state, const CrdtDelta& delta) {
  if (auto* s = std::get_if<CdvcsState>(&state)) {
    if (auto* d = std::get_if<DownstreamOp>(&delta)) return s->apply(*d);
  } else if (auto* s = std::get_if<OrSetState>(&state)) {
    if (auto* d = std::get_if<OrSetDelta>(&delta)) return s->apply(*d);
  }
  throw Error(ErrorCode::ProtocolError, "delta type does not match CRDT type");
}

bool merge_state(CrdtState& state, const CrdtState& other) {
  if (state.index() != other.index()) throw Error(ErrorCode::ProtocolError, "state type does not match CRDT type");
  if (auto* s = std::get_if<CdvcsState>(&state)) return s->merge_from(std::get<CdvcsState>(other));
  return std::get<OrSetState>(state).merge_from(std::get<OrSetState>(other));
}

}  // namespace cdvcs
