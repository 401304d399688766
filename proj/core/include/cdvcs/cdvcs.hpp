#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdvcs/commit_graph.hpp"

namespace cdvcs {

using BranchId = std::string;

/// Additive delta shipped between replicas: nodes to union into the graph and
/// heads to union into one branch.
struct DownstreamOp {
  BranchId branch;
  GraphFragment added_graph;
  Heads added_heads;

  bool empty() const { return added_graph.empty() && added_heads.empty(); }
  Bytes encode() const;
  static DownstreamOp decode(std::span<const std::uint8_t> bytes);
  bool operator==(const DownstreamOp&) const = default;
};

/// Commit graph shared by all branches plus the head set of every branch.
class CdvcsState {
public:
  const CommitGraph& graph() const { return graph_; }
  const std::map<BranchId, Heads>& branches() const { return branches_; }
  bool has_branch(const BranchId& b) const { return branches_.contains(b); }
  /// Throws Error(NoSuchBranch).
  const Heads& heads(const BranchId& b) const;

  /// Downstream application. Verifies that the op is parent-closed against
  /// this state before changing anything (Error(MissingDependency) otherwise).
  /// Returns true if the state changed.
  bool apply(const DownstreamOp& op);
  /// Semilattice join. Returns true if the state changed.
  bool merge_from(const CdvcsState& other);

  /// Canonical encoding: nodes in id order, branches in name order.
  Bytes encode() const;
  /// Validates parent closure and head membership (Error(ProtocolError)).
  static CdvcsState decode(std::span<const std::uint8_t> bytes);

  bool operator==(const CdvcsState& other) const {
    return branches_ == other.branches_ && graph_ == other.graph_;
  }

private:
  friend CdvcsState new_cdvcs(const CommitNode&, const BranchId&);

  CommitGraph graph_;
  std::map<BranchId, Heads> branches_;
};

/// Result of an upstream call: the new state, the delta to replicate, and
/// the commit node created by the call (commit and merge only).
struct Update {
  CdvcsState state;
  DownstreamOp op;
  std::optional<CommitNode> node;
};

struct MergePayload {
  std::vector<HashRef> txn_refs;
  Meta meta;
};

CdvcsState new_cdvcs(const CommitNode& root_node, const BranchId& branch);

// At-source halves: compute the delta from a read-only state.

DownstreamOp prepare_commit(const CdvcsState& state, const BranchId& branch, const CommitNode& node);
DownstreamOp prepare_branch(const CdvcsState& state, const BranchId& new_branch, const CommitId& at);
DownstreamOp prepare_pull(const CdvcsState& state, const BranchId& branch, const CommitGraph& remote_graph,
                          const CommitId& remote_head);
/// Builds the merge commit; parents are `ordered_heads` in the given order.
std::pair<CommitNode, DownstreamOp> prepare_merge(const CdvcsState& state, const BranchId& branch,
                                                  const std::vector<CommitId>& ordered_heads,
                                                  const MergePayload& payload);

// Full updates: at-source followed by local downstream application.

Update commit(CdvcsState state, const BranchId& branch, const CommitNode& node);
Update create_branch(CdvcsState state, const BranchId& new_branch, const CommitId& at);
Update pull(CdvcsState state, const BranchId& branch, const CommitGraph& remote_graph, const CommitId& remote_head);
Update merge(CdvcsState state, const BranchId& branch, const std::vector<CommitId>& ordered_heads,
             const MergePayload& payload);

CdvcsState apply_downstream(CdvcsState state, const DownstreamOp& op);
CdvcsState state_merge(CdvcsState state, const CdvcsState& other);

/// The head set if the branch is conflicted, nullopt if it has a single head.
std::optional<Heads> conflicts(const CdvcsState& state, const BranchId& branch);

/// Re-expresses a whole state as one delta per branch (the first carries the
/// full graph). Applying them to any state equals state_merge with `state`.
std::vector<DownstreamOp> as_downstream_ops(const CdvcsState& state);

/// Brute-force structural check: parent closure, non-empty head sets inside
/// the graph, and heads forming an antichain under reachability. Independent
/// of the LCA code path. Returns a description of every violation found.
std::vector<std::string> check_invariants(const CdvcsState& state);

}  // namespace cdvcs
