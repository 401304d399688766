#include "cdvcs/simnet.hpp"

#include <ostream>
#include <sstream>

#include "cdvcs/error.hpp"

namespace cdvcs::sim {

std::string TraceRecord::line() const {
  std::ostringstream os;
  os << tick << ' ' << from << ' ' << to << ' ' << to_string(kind) << ' ' << crdt_id << ' ' << delta;
  return os.str();
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::ConfigError, "empty sampling range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

Simnet::Simnet(SimConfig config) : config_(std::move(config)), rng_(config_.seed) {
  if (config_.latency_min > config_.latency_max) throw Error(ErrorCode::ConfigError, "latency_min > latency_max");
  if (config_.drop_prob < 0.0 || config_.drop_prob > 1.0) throw Error(ErrorCode::ConfigError, "drop_prob outside [0,1]");
  for (std::size_t i = 0; i < config_.partitions.size(); ++i) {
    const auto& p = config_.partitions[i];
    if (p.end <= p.start) throw Error(ErrorCode::ConfigError, "partition must end after it starts");
    Event heal;
    heal.type = Event::Type::Heal;
    heal.partition = i;
    push(p.end, std::move(heal));
  }
}

Peer& Simnet::add_peer(const PeerId& id, std::shared_ptr<ValueStore> store, PeerOptions options) {
  if (peers_.contains(id)) throw Error(ErrorCode::ConfigError, "duplicate peer " + id);
  if (!store) store = std::make_shared<MemoryStore>();
  auto& slot = peers_[id];
  slot = std::make_unique<Peer>(id, std::move(store), options);
  return *slot;
}

Peer& Simnet::peer(const PeerId& id) { return const_cast<Peer&>(std::as_const(*this).peer(id)); }

const Peer& Simnet::peer(const PeerId& id) const {
  auto it = peers_.find(id);
  if (it == peers_.end()) throw Error(ErrorCode::ConfigError, "unknown peer " + id);
  return *it->second;
}

std::vector<PeerId> Simnet::peer_ids() const {
  std::vector<PeerId> ids;
  for (const auto& [id, p] : peers_) ids.push_back(id);
  return ids;
}

std::pair<PeerId, PeerId> Simnet::link_key(const PeerId& a, const PeerId& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

bool Simnet::linked(const PeerId& a, const PeerId& b) const { return links_.contains(link_key(a, b)); }

void Simnet::connect(const PeerId& a, const PeerId& b) {
  if (a == b) throw Error(ErrorCode::ConfigError, "self-loop on " + a);
  auto& pa = peer(a);
  auto& pb = peer(b);
  links_.insert(link_key(a, b));
  send(a, pa.connect_to(b));
  send(b, pb.connect_to(a));
}

void Simnet::push(Tick at, Event e) { queue_.emplace(Key{at, seq_++}, std::move(e)); }

bool Simnet::partitioned(const PeerId& a, const PeerId& b) const {
  if (healed_) return false;
  for (const auto& p : config_.partitions) {
    if (p.start <= now_ && now_ < p.end && p.side.contains(a) != p.side.contains(b)) return true;
  }
  return false;
}

void Simnet::schedule(const PeerId& from, const PeerId& to, const PeerMessage& msg) {
  peer(from);
  peer(to);
  if (!linked(from, to)) throw Error(ErrorCode::ConfigError, "no link " + from + " - " + to);
  if (!healed_ && config_.drop_prob > 0.0 && rng_.chance(config_.drop_prob)) {
    ++counters_.dropped;
    return;
  }
  Event e{Event::Type::Deliver, from, to, encode_message(msg), 0};
  if (partitioned(from, to)) {
    ++counters_.withheld;
    withheld_.push_back(std::move(e));
    return;
  }
  const Tick latency = config_.latency_min + rng_.below(config_.latency_max - config_.latency_min + 1);
  push(now_ + latency, std::move(e));
}

void Simnet::send(const PeerId& from, const std::vector<Outgoing>& out) {
  for (const auto& o : out) schedule(from, o.to, o.msg);
}

void Simnet::local(const PeerId& id, const CrdtId& crdt, const UpstreamCall& call) {
  send(id, peer(id).local_upstream(crdt, call));
}

void Simnet::release_withheld() {
  auto held = std::move(withheld_);
  withheld_.clear();
  for (auto& e : held) {
    if (partitioned(e.from, e.to)) {
      withheld_.push_back(std::move(e));
      continue;
    }
    const Tick latency = config_.latency_min + rng_.below(config_.latency_max - config_.latency_min + 1);
    push(now_ + latency, std::move(e));
  }
}

void Simnet::sync_link(const PeerId& a, const PeerId& b) {
  // A fresh subscribe both restores interest lost to drops and triggers a
  // state sync in each direction.
  send(a, peer(a).connect_to(b));
  send(b, peer(b).connect_to(a));
}

void Simnet::heal_all() {
  healed_ = true;
  release_withheld();
  for (const auto& [a, b] : links_) sync_link(a, b);
}

void Simnet::process(const Key& key, Event e) {
  now_ = key.first;
  if (e.type == Event::Type::Heal) {
    if (healed_) return;
    release_withheld();
    const auto& side = config_.partitions[e.partition].side;
    for (const auto& [a, b] : links_) {
      if (side.contains(a) != side.contains(b)) sync_link(a, b);
    }
    return;
  }
  PeerMessage msg;
  try {
    msg = decode_message(e.frame);
  } catch (const Error&) {
    ++counters_.protocol_errors;
    return;
  }
  ++counters_.delivered;
  TraceRecord rec{now_, e.from, e.to, msg.kind(), msg.crdt_id, "-"};
  if (const auto* pub = std::get_if<PublishBody>(&msg.body)) rec.delta = delta_digest(msg.crdt_id, pub->op).short_hex(16);
  trace_.push_back(std::move(rec));
  std::vector<Outgoing> out;
  try {
    out = peer(e.to).handle_message(msg, now_);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::ProtocolError) throw;
    ++counters_.protocol_errors;
  }
  send(e.to, out);
}

void Simnet::run_until(Tick t) {
  while (!queue_.empty() && queue_.begin()->first.first <= t) {
    auto node = queue_.extract(queue_.begin());
    process(node.key(), std::move(node.mapped()));
    if (observer_) observer_(*this);
  }
  if (t > now_) now_ = t;
}

RunResult Simnet::run_until_quiescent(Tick max_ticks) {
  if (max_ticks == 0) throw Error(ErrorCode::ConfigError, "max_ticks must be positive");
  RunResult result{now_, now_, 0};
  const Tick deadline = now_ + max_ticks;
  while (!queue_.empty()) {
    if (queue_.begin()->first.first > deadline) {
      throw Error(ErrorCode::NonQuiescent, std::to_string(queue_.size()) + " events pending at tick " +
                                                std::to_string(now_));
    }
    auto node = queue_.extract(queue_.begin());
    process(node.key(), std::move(node.mapped()));
    ++result.events;
    if (observer_) observer_(*this);
  }
  result.end_tick = now_;
  return result;
}

void Simnet::write_trace(std::ostream& out) const {
  for (const auto& r : trace_) out << r.line() << '\n';
}

}  // namespace cdvcs::sim
