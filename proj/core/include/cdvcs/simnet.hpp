#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cdvcs/peer.hpp"

namespace cdvcs::sim {

/// Messages between `side` and the rest are withheld during [start, end).
/// At `end` the withheld messages are released and every cut link runs a
/// state sync in both directions.
struct Partition {
  Tick start = 0;
  Tick end = 0;
  std::set<PeerId> side;
};

struct SimConfig {
  std::uint64_t seed = 1;
  Tick latency_min = 1;
  Tick latency_max = 1;
  double drop_prob = 0.0;
  std::vector<Partition> partitions;
};

struct TraceRecord {
  Tick tick = 0;
  PeerId from;
  PeerId to;
  MessageKind kind = MessageKind::Subscribe;
  CrdtId crdt_id;
  std::string delta;  // digest prefix for PublishOp, "-" otherwise

  /// `tick from to kind crdt delta`, space separated.
  std::string line() const;
};

struct RunResult {
  Tick start_tick = 0;
  Tick end_tick = 0;
  std::size_t events = 0;
  Tick ticks() const { return end_tick - start_tick; }
};

struct NetCounters {
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t withheld = 0;
  std::uint64_t protocol_errors = 0;
};

/// Seeded RNG whose outputs do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

private:
  std::mt19937_64 engine_;
};

/// Discrete-event network of peers. Events are ordered by (tick, insertion
/// sequence); every message crosses the wire encoding in both directions.
class Simnet {
public:
  explicit Simnet(SimConfig config = {});

  Peer& add_peer(const PeerId& id, std::shared_ptr<ValueStore> store = nullptr, PeerOptions options = {});
  /// Error(ConfigError) for unknown ids.
  Peer& peer(const PeerId& id);
  const Peer& peer(const PeerId& id) const;
  std::vector<PeerId> peer_ids() const;

  /// Adds the link and schedules the mutual subscribe handshake.
  void connect(const PeerId& a, const PeerId& b);
  bool linked(const PeerId& a, const PeerId& b) const;

  /// Error(ConfigError) for unknown peers or peers without a link.
  void schedule(const PeerId& from, const PeerId& to, const PeerMessage& msg);
  /// Runs an upstream call on `peer` now and schedules its broadcasts.
  void local(const PeerId& peer, const CrdtId& crdt, const UpstreamCall& call);

  /// Processes every event due at or before `t`, then sets the clock to `t`.
  void run_until(Tick t);
  /// Runs until no event is queued. Error(NonQuiescent) if that would need
  /// more than `max_ticks` ticks from now.
  RunResult run_until_quiescent(Tick max_ticks);
  /// Ends all partitions, disables drops for the rest of the run, releases
  /// withheld messages and syncs every link.
  void heal_all();

  Tick now() const { return now_; }
  std::size_t in_flight() const { return queue_.size(); }
  const NetCounters& counters() const { return counters_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  void write_trace(std::ostream& out) const;

  /// Called after every processed event.
  void set_observer(std::function<void(Simnet&)> observer) { observer_ = std::move(observer); }

private:
  struct Event {
    enum class Type { Deliver, Heal } type = Type::Deliver;
    PeerId from;
    PeerId to;
    Bytes frame;
    std::size_t partition = 0;
  };
  using Key = std::pair<Tick, std::uint64_t>;

  void push(Tick at, Event e);
  void send(const PeerId& from, const std::vector<Outgoing>& out);
  bool partitioned(const PeerId& a, const PeerId& b) const;
  void release_withheld();
  void sync_link(const PeerId& a, const PeerId& b);
  void process(const Key& key, Event e);
  static std::pair<PeerId, PeerId> link_key(const PeerId& a, const PeerId& b);

  SimConfig config_;
  Rng rng_;
  std::map<PeerId, std::unique_ptr<Peer>> peers_;
  std::set<std::pair<PeerId, PeerId>> links_;
  std::map<Key, Event> queue_;
  std::vector<Event> withheld_;
  std::vector<TraceRecord> trace_;
  std::function<void(Simnet&)> observer_;
  NetCounters counters_;
  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  bool healed_ = false;
};

}  // namespace cdvcs::sim
