#pragma once

#include <concepts>
#include <span>
#include <variant>

#include "cdvcs/cdvcs.hpp"
#include "cdvcs/orset.hpp"

namespace cdvcs {

/// The replication interface every datatype implements: state-based in
/// memory (join via merge_from), op-based in transit (apply of a delta).
template <typename State, typename Delta>
concept ReplicatedType = requires(State s, const State& cs, const Delta& d) {
  { s.apply(d) } -> std::same_as<bool>;
  { s.merge_from(cs) } -> std::same_as<bool>;
  { cs.encode() } -> std::same_as<Bytes>;
  { d.encode() } -> std::same_as<Bytes>;
};

static_assert(ReplicatedType<CdvcsState, DownstreamOp>);
static_assert(ReplicatedType<OrSetState, OrSetDelta>);

using CrdtState = std::variant<CdvcsState, OrSetState>;
using CrdtDelta = std::variant<DownstreamOp, OrSetDelta>;

// Tagged encodings: one type byte (1 = CDVCS, 2 = OR-set) then the payload.
Bytes encode_state(const CrdtState& state);
CrdtState decode_state(std::span<const std::uint8_t> bytes);
Bytes encode_delta(const CrdtDelta& delta);
CrdtDelta decode_delta(std::span<const std::uint8_t> bytes);

/// Applies a delta of the matching type; Error(ProtocolError) on a mismatch.
bool apply_delta(CrdtState& state, const CrdtDelta& delta);
bool merge_state(CrdtState& state, const CrdtState& other);

}  // namespace cdvcs
