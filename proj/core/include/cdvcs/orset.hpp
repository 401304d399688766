#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>

#include "cdvcs/digest.hpp"

namespace cdvcs {

using Element = std::string;
using ReplicaId = std::string;

struct Tag {
  ReplicaId replica;
  std::uint64_t counter = 0;

  auto operator<=>(const Tag&) const = default;
  bool operator==(const Tag&) const = default;
};

using TagMap = std::map<Element, std::set<Tag>>;

struct OrSetDelta {
  TagMap added;
  TagMap removed;

  bool empty() const { return added.empty() && removed.empty(); }
  Bytes encode() const;
  static OrSetDelta decode(std::span<const std::uint8_t> bytes);
  bool operator==(const OrSetDelta&) const = default;
};

/// Add-wins observed-remove set. Removed tags stay as tombstones so a late
/// add delta for an already removed tag cannot resurrect it.
class OrSetState {
public:
  const TagMap& entries() const { return entries_; }
  const TagMap& tombstones() const { return tombstones_; }

  bool contains(const Element& e) const { return entries_.contains(e); }
  std::set<Element> elements() const;
  /// Highest tag counter issued by `replica` that this state has seen.
  std::uint64_t clock(const ReplicaId& replica) const;

  bool apply(const OrSetDelta& delta);
  bool merge_from(const OrSetState& other);

  Bytes encode() const;
  static OrSetState decode(std::span<const std::uint8_t> bytes);

  bool operator==(const OrSetState& other) const {
    return entries_ == other.entries_ && tombstones_ == other.tombstones_;
  }

private:
  bool add_tag(const Element& e, const Tag& t);
  bool remove_tag(const Element& e, const Tag& t);

  TagMap entries_;  // live tags only; an element with no live tag has no key
  TagMap tombstones_;
  std::map<ReplicaId, std::uint64_t> clocks_;
};

struct OrSetUpdate {
  OrSetState state;
  OrSetDelta delta;
};

OrSetDelta prepare_add(const OrSetState& state, const Element& element, const ReplicaId& replica);
/// Throws Error(NotPresent) when the element has no live tag.
OrSetDelta prepare_remove(const OrSetState& state, const Element& element);

OrSetUpdate or_add(OrSetState state, const Element& element, const ReplicaId& replica);
OrSetUpdate or_remove(OrSetState state, const Element& element);
OrSetState or_apply_downstream(OrSetState state, const OrSetDelta& delta);
OrSetState or_state_merge(OrSetState state, const OrSetState& other);
std::set<Element> or_elements(const OrSetState& state);

/// The whole state as one delta; applying it equals merging the state.
OrSetDelta as_delta(const OrSetState& state);

}  // namespace cdvcs
