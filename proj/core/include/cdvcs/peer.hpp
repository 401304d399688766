#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cdvcs/crdt.hpp"
#include "cdvcs/message.hpp"
#include "cdvcs/store.hpp"

namespace cdvcs {

using Tick = std::uint64_t;

enum class Verdict { Accept, Reject, Replace };

struct HookDecision {
  Verdict verdict = Verdict::Accept;
  std::optional<CrdtDelta> replacement;

  static HookDecision accept() { return {}; }
  static HookDecision reject() { return {Verdict::Reject, std::nullopt}; }
  static HookDecision replace(CrdtDelta op) { return {Verdict::Replace, std::move(op)}; }
};

/// What a pull hook sees: the incoming op with all of its dependencies
/// already in `store`, and the CRDT state it would be applied to.
struct HookContext {
  const CrdtId& crdt_id;
  const PeerId& from;
  const CrdtDelta& op;
  const CrdtState& state;
  const ValueStore& store;
};

using PullHook = std::function<HookDecision(const HookContext&)>;

struct Outgoing {
  PeerId to;
  PeerMessage msg;
};

namespace upstream {

struct Commit {
  BranchId branch;
  std::vector<Bytes> txns;
  Meta meta;
};
struct Branch {
  BranchId name;
  CommitId at;
};
/// Pulls `remote_head` of another CRDT held by the same peer.
struct Pull {
  BranchId branch;
  CrdtId source;
  CommitId remote_head;
};
/// Empty `ordered_heads` merges the current heads in id order.
struct Merge {
  BranchId branch;
  std::vector<Bytes> txns;
  Meta meta;
  std::vector<CommitId> ordered_heads;
};
struct Add {
  Element element;
};
struct Remove {
  Element element;
};

}  // namespace upstream

using UpstreamCall = std::variant<upstream::Commit, upstream::Branch, upstream::Pull, upstream::Merge,
                                  upstream::Add, upstream::Remove>;

struct PeerOptions {
  std::size_t max_pending = 1024;
};

struct PeerStats {
  std::uint64_t applied_ops = 0;
  std::uint64_t duplicate_ops = 0;
  std::uint64_t rejected_ops = 0;
  std::uint64_t replaced_ops = 0;
  std::uint64_t state_syncs_applied = 0;
  std::uint64_t fetch_requests_sent = 0;
  std::uint64_t values_fetched = 0;
  std::uint64_t integrity_failures = 0;
  std::uint64_t protocol_errors = 0;
  std::uint64_t dropped_pending = 0;
  std::uint64_t ignored_messages = 0;
  /// Times an op reached the apply step while store refs were missing. The
  /// op is refused in that case; a nonzero value indicates a logic error.
  std::uint64_t atomicity_violations = 0;
};

/// Replication peer: a sequential state machine hosting CRDT replicas over a
/// shared content-addressed store. Every call returns the messages it wants
/// sent; transport is the caller's job.
class Peer {
public:
  explicit Peer(PeerId id, std::shared_ptr<ValueStore> store = std::make_shared<MemoryStore>(),
                PeerOptions options = {});

  const PeerId& id() const { return id_; }
  ValueStore& store() { return *store_; }
  const ValueStore& store() const { return *store_; }

  /// Stores the root node and creates the replica.
  void create_cdvcs(const CrdtId& crdt, const CommitNode& root, const BranchId& branch);
  void create_orset(const CrdtId& crdt);

  bool has_crdt(const CrdtId& crdt) const { return crdts_.contains(crdt); }
  std::vector<CrdtId> crdt_ids() const;
  /// Error(UnknownCrdt) when absent or of the other type.
  const CrdtState& crdt(const CrdtId& crdt) const;
  const CdvcsState& cdvcs(const CrdtId& crdt) const;
  const OrSetState& orset(const CrdtId& crdt) const;

  /// Hooks run in registration order on every remote PublishOp, after its
  /// dependencies are fetched and before it is applied.
  void add_pull_hook(PullHook hook);

  /// Subscribe messages for `crdts` (all held CRDTs when empty).
  /// Error(ConfigError) for a self-loop.
  std::vector<Outgoing> connect_to(const PeerId& neighbor, const std::vector<CrdtId>& crdts = {});
  /// A StateSyncRequest for each held CRDT.
  std::vector<Outgoing> sync_with(const PeerId& neighbor) const;

  std::vector<Outgoing> handle_message(const PeerMessage& msg, Tick now);

  /// Runs an upstream call, applies its delta locally and returns the
  /// PublishOps for subscribed neighbors. Upstream errors propagate and leave
  /// the replica unchanged.
  std::vector<Outgoing> local_upstream(const CrdtId& crdt, const UpstreamCall& call);

  const PeerStats& stats() const { return stats_; }
  std::size_t pending_count() const { return pending_.size(); }
  const std::map<PeerId, std::set<CrdtId>>& subscriptions() const { return subscriptions_; }
  /// Buckets rewritten by the most recent application.
  const std::set<BucketKey>& last_touched_buckets() const { return last_touched_; }

private:
  struct Pending {
    CrdtId crdt;
    PeerId from;
    std::variant<CrdtDelta, CrdtState> item;
    Digest digest;          // ops only
    GraphFragment extra;    // ancestors recovered from stored commit nodes
    std::set<HashRef> requested;
    std::set<HashRef> waiting;  // missing at the last attempt
    Tick received = 0;
  };
  struct DepScan {
    std::set<HashRef> missing;
    bool malformed = false;
  };

  CrdtState& state_of(const CrdtId& crdt);
  CdvcsState& cdvcs_of(const CrdtId& crdt);
  OrSetState& orset_of(const CrdtId& crdt);

  DepScan scan_dependencies(const CommitGraph* local, const GraphFragment& declared, const Heads& heads,
                            GraphFragment& extra);
  bool refs_present(const CommitGraph* local, const GraphFragment& nodes);
  /// True when the pending item is finished (applied or dropped).
  bool try_complete(Pending& p, std::vector<Outgoing>& out);
  void apply_op(const CrdtId& crdt, const CrdtDelta& op, const Digest& digest, const PeerId& except,
                std::vector<Outgoing>& out);
  void apply_state(const CrdtId& crdt, const CrdtState& remote, const PeerId& except, std::vector<Outgoing>& out);
  void drain_pending(std::vector<Outgoing>& out);
  void enqueue(Pending p, std::vector<Outgoing>& out);
  void broadcast(const CrdtId& crdt, const CrdtDelta& op, const PeerId& except, std::vector<Outgoing>& out);
  Meta stamp(Meta meta);

  PeerId id_;
  std::shared_ptr<ValueStore> store_;
  PeerOptions options_;
  std::map<CrdtId, CrdtState> crdts_;
  std::map<PeerId, std::set<CrdtId>> subscriptions_;
  std::set<Digest> applied_;
  std::deque<Pending> pending_;
  std::vector<PullHook> hooks_;
  std::set<BucketKey> last_touched_;
  // Commit nodes already decoded from the store. Values are immutable, so
  // entries never go stale.
  std::unordered_map<CommitId, CommitNode, DigestHash> decoded_;
  std::uint64_t local_seq_ = 0;
  PeerStats stats_;
};

}  // namespace cdvcs
