#include "cdvcs/orset.hpp"

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {

constexpr std::uint8_t kDeltaTag = 0x41;  // 'A'
constexpr std::uint8_t kStateTag = 0x4f;  // 'O'
constexpr std::uint8_t kVersion = 1;

void write_tags(Writer& w, const TagMap& tags) {
  w.u32(static_cast<std::uint32_t>(tags.size()));
  for (const auto& [element, set] : tags) {
    w.str(element);
    w.u32(static_cast<std::uint32_t>(set.size()));
    for (const auto& t : set) {
      w.str(t.replica);
      w.u64(t.counter);
    }
  }
}

TagMap read_tags(Reader& r) {
  TagMap tags;
  for (auto n = r.count(8); n > 0; --n) {
    auto element = r.str();
    if (!tags.empty() && element <= tags.rbegin()->first) throw Error(ErrorCode::ProtocolError, "elements not ordered");
    std::set<Tag> set;
    for (auto k = r.count(12); k > 0; --k) {
      Tag t;
      t.replica = r.str();
      t.counter = r.u64();
      if (!set.empty() && t <= *set.rbegin()) throw Error(ErrorCode::ProtocolError, "tags not ordered");
      set.insert(set.end(), std::move(t));
    }
    if (set.empty()) throw Error(ErrorCode::ProtocolError, "element without tags");
    tags.emplace_hint(tags.end(), std::move(element), std::move(set));
  }
  return tags;
}

}  // namespace

Bytes OrSetDelta::encode() const {
  Writer w;
  w.u8(kDeltaTag);
  w.u8(kVersion);
  write_tags(w, added);
  write_tags(w, removed);
  return std::move(w).take();
}

OrSetDelta OrSetDelta::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kDeltaTag || r.u8() != kVersion) throw Error(ErrorCode::ProtocolError, "not an OR-set delta encoding");
  OrSetDelta d;
  d.added = read_tags(r);
  d.removed = read_tags(r);
  r.expect_done();
  return d;
}

std::set<Element> OrSetState::elements() const {
  std::set<Element> out;
  for (const auto& [e, tags] : entries_) out.insert(out.end(), e);
  return out;
}

std::uint64_t OrSetState::clock(const ReplicaId& replica) const {
  auto it = clocks_.find(replica);
  return it == clocks_.end() ? 0 : it->second;
}

bool OrSetState::add_tag(const Element& e, const Tag& t) {
  auto& clock = clocks_[t.replica];
  if (t.counter > clock) clock = t.counter;
  if (auto dead = tombstones_.find(e); dead != tombstones_.end() && dead->second.contains(t)) return false;
  return entries_[e].insert(t).second;
}

bool OrSetState::remove_tag(const Element& e, const Tag& t) {
  auto& clock = clocks_[t.replica];
  if (t.counter > clock) clock = t.counter;
  const bool fresh = tombstones_[e].insert(t).second;
  if (auto live = entries_.find(e); live != entries_.end()) {
    live->second.erase(t);
    if (live->second.empty()) entries_.erase(live);
  }
  return fresh;
}

bool OrSetState::apply(const OrSetDelta& delta) {
  bool changed = false;
  for (const auto& [e, tags] : delta.removed) {
    for (const auto& t : tags) changed |= remove_tag(e, t);
  }
  for (const auto& [e, tags] : delta.added) {
    for (const auto& t : tags) changed |= add_tag(e, t);
  }
  return changed;
}

bool OrSetState::merge_from(const OrSetState& other) { return apply(as_delta(other)); }

Bytes OrSetState::encode() const {
  Writer w;
  w.u8(kStateTag);
  w.u8(kVersion);
  write_tags(w, entries_);
  write_tags(w, tombstones_);
  return std::move(w).take();
}

OrSetState OrSetState::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kStateTag || r.u8() != kVersion) throw Error(ErrorCode::ProtocolError, "not an OR-set state encoding");
  OrSetDelta d;
  d.added = read_tags(r);
  d.removed = read_tags(r);
  r.expect_done();
  for (const auto& [e, tags] : d.added) {
    auto dead = d.removed.find(e);
    if (dead == d.removed.end()) continue;
    for (const auto& t : tags) {
      if (dead->second.contains(t)) throw Error(ErrorCode::ProtocolError, "tag both live and removed");
    }
  }
  OrSetState s;
  s.apply(d);
  return s;
}

OrSetDelta prepare_add(const OrSetState& state, const Element& element, const ReplicaId& replica) {
  OrSetDelta d;
  d.added[element].insert(Tag{replica, state.clock(replica) + 1});
  return d;
}

OrSetDelta prepare_remove(const OrSetState& state, const Element& element) {
  auto it = state.entries().find(element);
  if (it == state.entries().end()) throw Error(ErrorCode::NotPresent, element);
  OrSetDelta d;
  d.removed.emplace(element, it->second);
  return d;
}

OrSetUpdate or_add(OrSetState state, const Element& element, const ReplicaId& replica) {
  auto d = prepare_add(state, element, replica);
  state.apply(d);
  return {std::move(state), std::move(d)};
}

OrSetUpdate or_remove(OrSetState state, const Element& element) {
  auto d = prepare_remove(state, element);
  state.apply(d);
  return {std::move(state), std::move(d)};
}

OrSetState or_apply_downstream(OrSetState state, const OrSetDelta& delta) {
  state.apply(delta);
  return state;
}

OrSetState or_state_merge(OrSetState state, const OrSetState& other) {
  state.merge_from(other);
  return state;
}

std::set<Element> or_elements(const OrSetState& state) { return state.elements(); }

OrSetDelta as_delta(const OrSetState& state) { return OrSetDelta{state.entries(), state.tombstones()}; }

}  // namespace cdvcs
