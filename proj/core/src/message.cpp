#include "cdvcs/message.hpp"

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"

namespace cdvcs {

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Subscribe: return "subscribe";
    case MessageKind::PublishOp: return "publish";
    case MessageKind::FetchRequest: return "fetch-req";
    case MessageKind::FetchResponse: return "fetch-resp";
    case MessageKind::StateSyncRequest: return "sync-req";
    case MessageKind::StateSyncResponse: return "sync-resp";
  }
  return "unknown";
}

namespace {

struct BodyWriter {
  Writer& w;
  void operator()(const SubscribeBody&) const {}
  void operator()(const StateSyncRequestBody&) const {}
  void operator()(const PublishBody& b) const { w.bytes(encode_delta(b.op)); }
  void operator()(const StateSyncResponseBody& b) const { w.bytes(encode_state(b.state)); }
  void operator()(const FetchRequestBody& b) const {
    w.u32(static_cast<std::uint32_t>(b.refs.size()));
    for (const auto& r : b.refs) w.digest(r);
  }
  void operator()(const FetchResponseBody& b) const {
    w.u32(static_cast<std::uint32_t>(b.values.size()));
    for (const auto& [ref, value] : b.values) {
      w.digest(ref);
      w.bytes(value);
    }
  }
};

MessageBody read_body(MessageKind kind, Reader& r) {
  switch (kind) {
    case MessageKind::Subscribe: return SubscribeBody{};
    case MessageKind::StateSyncRequest: return StateSyncRequestBody{};
    case MessageKind::PublishOp: return PublishBody{decode_delta(r.bytes())};
    case MessageKind::StateSyncResponse: return StateSyncResponseBody{decode_state(r.bytes())};
    case MessageKind::FetchRequest: {
      FetchRequestBody b;
      for (auto n = r.count(Digest::kSize); n > 0; --n) b.refs.push_back(r.digest());
      return b;
    }
    case MessageKind::FetchResponse: {
      FetchResponseBody b;
      for (auto n = r.count(Digest::kSize + 4); n > 0; --n) {
        auto ref = r.digest();
        b.values.emplace_back(ref, r.bytes());
      }
      return b;
    }
  }
  throw Error(ErrorCode::ProtocolError, "unknown message kind");
}

}  // namespace

Bytes encode_message(const PeerMessage& msg) {
  Writer body;
  body.u8(static_cast<std::uint8_t>(msg.kind()));
  body.str(msg.crdt_id);
  body.str(msg.origin);
  std::visit(BodyWriter{body}, msg.body);
  Writer frame;
  frame.u32(static_cast<std::uint32_t>(body.data().size()));
  frame.raw(body.data());
  return std::move(frame).take();
}

PeerMessage decode_message(std::span<const std::uint8_t> frame) {
  Reader r(frame);
  const auto length = r.u32();
  if (length != r.remaining()) throw Error(ErrorCode::ProtocolError, "frame length mismatch");
  const auto kind_byte = r.u8();
  if (kind_byte < 1 || kind_byte > 6) throw Error(ErrorCode::ProtocolError, "unknown message kind");
  PeerMessage msg;
  msg.crdt_id = r.str();
  msg.origin = r.str();
  msg.body = read_body(static_cast<MessageKind>(kind_byte), r);
  r.expect_done();
  return msg;
}

Digest delta_digest(const CrdtId& crdt_id, const CrdtDelta& op) {
  Writer w;
  w.str(crdt_id);
  w.raw(encode_delta(op));
  return sha256(w.data());
}

}  // namespace cdvcs
