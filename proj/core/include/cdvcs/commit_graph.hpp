#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cdvcs/digest.hpp"

namespace cdvcs {

using Heads = std::set<CommitId>;
using Meta = std::map<std::string, std::string>;

/// One commit as stored and hashed. The id of a commit is the SHA-256 of
/// `encode()`, so every field here, metadata included, is part of identity.
struct CommitNode {
  std::vector<CommitId> parents;
  std::vector<HashRef> txn_refs;
  Meta meta;

  Bytes encode() const;
  /// Rejects malformed input and duplicate parents with Error(ProtocolError).
  static CommitNode decode(std::span<const std::uint8_t> bytes);
  CommitId id() const;

  bool operator==(const CommitNode&) const = default;
};

/// Additions to a commit graph: id -> ordered parents. Not necessarily
/// parent-closed on its own.
using GraphFragment = std::map<CommitId, std::vector<CommitId>>;

/// Add-only, parent-closed commit DAG. Each node also carries its generation
/// (1 for roots, 1 + max parent generation otherwise), which depends only on
/// the node's ancestry and is therefore identical in every replica.
class CommitGraph {
public:
  struct Entry {
    std::vector<CommitId> parents;
    std::uint64_t generation = 0;
  };
  using Map = std::map<CommitId, Entry>;

  bool contains(const CommitId& id) const { return nodes_.contains(id); }
  const Entry* find(const CommitId& id) const;
  /// Throws Error(UnknownCommit).
  const std::vector<CommitId>& parents(const CommitId& id) const;
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  Map::const_iterator begin() const { return nodes_.begin(); }
  Map::const_iterator end() const { return nodes_.end(); }

  /// Unions `fragment` into the graph. Every parent must resolve to a node
  /// already present or inside the fragment, and the fragment must be acyclic;
  /// otherwise Error(MissingDependency) is thrown and the graph is untouched.
  /// Returns the ids that were not present before, parents first.
  std::vector<CommitId> add(const GraphFragment& fragment);

  /// Union with another well-formed graph. Returns the newly added ids.
  std::vector<CommitId> merge(const CommitGraph& other);

  /// The nodes of `ids` as a fragment (ids must be present).
  GraphFragment fragment(const std::vector<CommitId>& ids) const;
  GraphFragment as_fragment() const;

  bool operator==(const CommitGraph& other) const;

private:
  Map nodes_;
};

struct LcaResult {
  Heads ancestors;
  std::set<CommitId> visited_a;
  std::set<CommitId> visited_b;
};

/// Maximal common ancestors of `start_a` (looked up in `graph_a`) and
/// `start_b` (in `graph_b`) over the union of both graphs. Both sides are
/// painted concurrently, highest generation first; painting stops once every
/// queued node is known to lie below a common ancestor.
///
/// Throws Error(UnknownCommit) for absent starts and Error(NoCommonAncestor)
/// for disjoint histories.
LcaResult lca(const CommitGraph& graph_a, const CommitId& start_a, const CommitGraph& graph_b,
              const CommitId& start_b);

/// True iff `ancestor` is a reflexive ancestor of `descendant`.
bool is_ancestor(const CommitGraph& graph, const CommitId& ancestor, const CommitId& descendant);

/// Drops every head that is a proper ancestor of another head.
/// Throws Error(UnknownCommit) if a head is missing from `graph`.
Heads remove_ancestors(const CommitGraph& graph, const Heads& heads);

/// Topological linearization of the reflexive ancestors of `c`: depth-first
/// from `c`, parents in stored order, each commit emitted once on completion.
/// The last element is `c`.
std::vector<CommitId> commit_history(const CommitGraph& graph, const CommitId& c);

}  // namespace cdvcs
