#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cdvcs/crdt.hpp"

namespace cdvcs {

using PeerId = std::string;
using CrdtId = std::string;

enum class MessageKind : std::uint8_t {
  Subscribe = 1,
  PublishOp = 2,
  FetchRequest = 3,
  FetchResponse = 4,
  StateSyncRequest = 5,
  StateSyncResponse = 6,
};

std::string_view to_string(MessageKind kind);

struct SubscribeBody {
  bool operator==(const SubscribeBody&) const = default;
};
struct PublishBody {
  CrdtDelta op;
  bool operator==(const PublishBody&) const = default;
};
struct FetchRequestBody {
  std::vector<HashRef> refs;
  bool operator==(const FetchRequestBody&) const = default;
};
struct FetchResponseBody {
  std::vector<std::pair<HashRef, Bytes>> values;
  bool operator==(const FetchResponseBody&) const = default;
};
struct StateSyncRequestBody {
  bool operator==(const StateSyncRequestBody&) const = default;
};
struct StateSyncResponseBody {
  CrdtState state;
  bool operator==(const StateSyncResponseBody&) const = default;
};

// Alternative order matches MessageKind - 1.
using MessageBody = std::variant<SubscribeBody, PublishBody, FetchRequestBody, FetchResponseBody,
                                 StateSyncRequestBody, StateSyncResponseBody>;

/// `origin` is the peer that sent this message on the current hop.
struct PeerMessage {
  CrdtId crdt_id;
  PeerId origin;
  MessageBody body;

  MessageKind kind() const { return static_cast<MessageKind>(body.index() + 1); }
  bool operator==(const PeerMessage&) const = default;
};

/// Frame layout: u32 length of the rest, u8 kind, crdt_id, origin, body.
Bytes encode_message(const PeerMessage& msg);
/// Error(ProtocolError) on a bad length prefix, unknown kind or malformed body.
PeerMessage decode_message(std::span<const std::uint8_t> frame);

/// Digest identifying the delta carried by a PublishOp, scoped by CRDT id.
Digest delta_digest(const CrdtId& crdt_id, const CrdtDelta& op);

}  // namespace cdvcs
