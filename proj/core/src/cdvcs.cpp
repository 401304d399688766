#include "cdvcs/cdvcs.hpp"

#include <algorithm>
#include <unordered_set>

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {

constexpr std::uint8_t kStateTag = 0x53;  // 'S'
constexpr std::uint8_t kOpTag = 0x44;     // 'D'
constexpr std::uint8_t kVersion = 1;

void write_fragment(Writer& w, const GraphFragment& fragment) {
  w.u32(static_cast<std::uint32_t>(fragment.size()));
  for (const auto& [id, parents] : fragment) {
    w.digest(id);
    w.u32(static_cast<std::uint32_t>(parents.size()));
    for (const auto& p : parents) w.digest(p);
  }
}

GraphFragment read_fragment(Reader& r) {
  GraphFragment fragment;
  for (auto n = r.count(Digest::kSize + 4); n > 0; --n) {
    const auto id = r.digest();
    std::vector<CommitId> parents;
    for (auto k = r.count(Digest::kSize); k > 0; --k) parents.push_back(r.digest());
    if (!fragment.empty() && id <= fragment.rbegin()->first) {
      throw Error(ErrorCode::ProtocolError, "graph entries not strictly ordered");
    }
    fragment.emplace_hint(fragment.end(), id, std::move(parents));
  }
  return fragment;
}

void write_heads(Writer& w, const Heads& heads) {
  w.u32(static_cast<std::uint32_t>(heads.size()));
  for (const auto& h : heads) w.digest(h);
}

Heads read_heads(Reader& r) {
  Heads heads;
  for (auto n = r.count(Digest::kSize); n > 0; --n) {
    const auto h = r.digest();
    if (!heads.empty() && h <= *heads.rbegin()) throw Error(ErrorCode::ProtocolError, "heads not strictly ordered");
    heads.insert(heads.end(), h);
  }
  return heads;
}

const CommitId& single_head(const CdvcsState& state, const BranchId& branch) {
  const auto& heads = state.heads(branch);
  if (heads.size() != 1) {
    throw Error(ErrorCode::ConflictPending, "branch '" + branch + "' has " + std::to_string(heads.size()) + " heads");
  }
  return *heads.begin();
}

}  // namespace

Bytes DownstreamOp::encode() const {
  Writer w;
  w.u8(kOpTag);
  w.u8(kVersion);
  w.str(branch);
  write_fragment(w, added_graph);
  write_heads(w, added_heads);
  return std::move(w).take();
}

DownstreamOp DownstreamOp::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kOpTag || r.u8() != kVersion) throw Error(ErrorCode::ProtocolError, "not a downstream op encoding");
  DownstreamOp op;
  op.branch = r.str();
  op.added_graph = read_fragment(r);
  op.added_heads = read_heads(r);
  r.expect_done();
  return op;
}

const Heads& CdvcsState::heads(const BranchId& b) const {
  auto it = branches_.find(b);
  if (it == branches_.end()) throw Error(ErrorCode::NoSuchBranch, b);
  return it->second;
}

bool CdvcsState::apply(const DownstreamOp& op) {
  for (const auto& h : op.added_heads) {
    if (!graph_.contains(h) && !op.added_graph.contains(h)) {
      throw Error(ErrorCode::MissingDependency, "head " + h.hex() + " not in graph");
    }
  }
  const auto added = graph_.add(op.added_graph);  // verifies closure before mutating
  if (op.added_heads.empty()) return !added.empty();

  Heads candidate;
  auto it = branches_.find(op.branch);
  if (it != branches_.end()) candidate = it->second;
  candidate.insert(op.added_heads.begin(), op.added_heads.end());
  Heads next = remove_ancestors(graph_, candidate);
  if (it == branches_.end()) {
    branches_.emplace(op.branch, std::move(next));
    return true;
  }
  if (next == it->second) return !added.empty();
  it->second = std::move(next);
  return true;
}

bool CdvcsState::merge_from(const CdvcsState& other) {
  const auto added = graph_.merge(other.graph_);
  bool changed = !added.empty();
  for (const auto& [branch, theirs] : other.branches_) {
    auto it = branches_.find(branch);
    if (it == branches_.end()) {
      branches_.emplace(branch, theirs);
      changed = true;
      continue;
    }
    Heads candidate = it->second;
    candidate.insert(theirs.begin(), theirs.end());
    Heads next = remove_ancestors(graph_, candidate);
    if (next != it->second) {
      it->second = std::move(next);
      changed = true;
    }
  }
  return changed;
}

Bytes CdvcsState::encode() const {
  Writer w;
  w.u8(kStateTag);
  w.u8(kVersion);
  w.u32(static_cast<std::uint32_t>(graph_.size()));
  for (const auto& [id, entry] : graph_) {
    w.digest(id);
    w.u32(static_cast<std::uint32_t>(entry.parents.size()));
    for (const auto& p : entry.parents) w.digest(p);
  }
  w.u32(static_cast<std::uint32_t>(branches_.size()));
  for (const auto& [name, heads] : branches_) {
    w.str(name);
    write_heads(w, heads);
  }
  return std::move(w).take();
}

CdvcsState CdvcsState::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kStateTag || r.u8() != kVersion) throw Error(ErrorCode::ProtocolError, "not a CDVCS state encoding");
  CdvcsState state;
  const auto fragment = read_fragment(r);
  try {
    state.graph_.add(fragment);
  } catch (const Error& e) {
    throw Error(ErrorCode::ProtocolError, std::string("state graph: ") + e.what());
  }
  for (auto n = r.count(4); n > 0; --n) {
    auto name = r.str();
    auto heads = read_heads(r);
    if (heads.empty()) throw Error(ErrorCode::ProtocolError, "branch without heads");
    for (const auto& h : heads) {
      if (!state.graph_.contains(h)) throw Error(ErrorCode::ProtocolError, "head outside graph");
    }
    if (!state.branches_.emplace(std::move(name), std::move(heads)).second) {
      throw Error(ErrorCode::ProtocolError, "duplicate branch");
    }
  }
  r.expect_done();
  return state;
}

CdvcsState new_cdvcs(const CommitNode& root_node, const BranchId& branch) {
  if (!root_node.parents.empty()) throw Error(ErrorCode::InvalidRoot, "root commit must not have parents");
  const auto r = root_node.id();
  CdvcsState state;
  state.graph_.add({{r, {}}});
  state.branches_.emplace(branch, Heads{r});
  return state;
}

DownstreamOp prepare_commit(const CdvcsState& state, const BranchId& branch, const CommitNode& node) {
  const auto& head = single_head(state, branch);
  if (node.parents.size() != 1 || node.parents.front() != head) {
    throw Error(ErrorCode::StaleParent, "commit must have the current head " + head.short_hex() + " as sole parent");
  }
  const auto c = node.id();
  return DownstreamOp{branch, {{c, node.parents}}, {c}};
}

DownstreamOp prepare_branch(const CdvcsState& state, const BranchId& new_branch, const CommitId& at) {
  if (state.has_branch(new_branch)) throw Error(ErrorCode::BranchExists, new_branch);
  if (!state.graph().contains(at)) throw Error(ErrorCode::UnknownCommit, at.hex());
  return DownstreamOp{new_branch, {}, {at}};
}

DownstreamOp prepare_pull(const CdvcsState& state, const BranchId& branch, const CommitGraph& remote_graph,
                          const CommitId& remote_head) {
  const auto& head = single_head(state, branch);
  if (!remote_graph.contains(remote_head)) throw Error(ErrorCode::UnknownCommit, remote_head.hex());
  const auto found = lca(state.graph(), head, remote_graph, remote_head);
  if (found.ancestors == Heads{remote_head}) return DownstreamOp{branch, {}, {}};

  const auto& local = state.graph();
  GraphFragment added;
  std::vector<CommitId> work;
  for (const auto& id : found.visited_b) {
    if (!local.contains(id)) work.push_back(id);
  }
  // Everything the remote side painted that is missing locally, closed under
  // parents within the remote graph.
  while (!work.empty()) {
    const auto id = work.back();
    work.pop_back();
    if (local.contains(id) || added.contains(id)) continue;
    const auto& ps = remote_graph.parents(id);
    added.emplace(id, ps);
    for (const auto& p : ps) work.push_back(p);
  }
  return DownstreamOp{branch, std::move(added), {remote_head}};
}

std::pair<CommitNode, DownstreamOp> prepare_merge(const CdvcsState& state, const BranchId& branch,
                                                  const std::vector<CommitId>& ordered_heads,
                                                  const MergePayload& payload) {
  const auto& heads = state.heads(branch);
  if (heads.size() < 2) throw Error(ErrorCode::NothingToMerge, "branch '" + branch + "' is not conflicted");
  const Heads requested(ordered_heads.begin(), ordered_heads.end());
  if (requested.size() != ordered_heads.size() || requested != heads) {
    throw Error(ErrorCode::StaleMerge, "merge parents do not match the current heads of '" + branch + "'");
  }
  CommitNode node{ordered_heads, payload.txn_refs, payload.meta};
  const auto e = node.id();
  DownstreamOp op{branch, {{e, ordered_heads}}, {e}};
  return {std::move(node), std::move(op)};
}

Update commit(CdvcsState state, const BranchId& branch, const CommitNode& node) {
  auto op = prepare_commit(state, branch, node);
  state.apply(op);
  return {std::move(state), std::move(op), node};
}

Update create_branch(CdvcsState state, const BranchId& new_branch, const CommitId& at) {
  auto op = prepare_branch(state, new_branch, at);
  state.apply(op);
  return {std::move(state), std::move(op), std::nullopt};
}

Update pull(CdvcsState state, const BranchId& branch, const CommitGraph& remote_graph, const CommitId& remote_head) {
  auto op = prepare_pull(state, branch, remote_graph, remote_head);
  state.apply(op);
  return {std::move(state), std::move(op), std::nullopt};
}

Update merge(CdvcsState state, const BranchId& branch, const std::vector<CommitId>& ordered_heads,
             const MergePayload& payload) {
  auto [node, op] = prepare_merge(state, branch, ordered_heads, payload);
  state.apply(op);
  return {std::move(state), std::move(op), std::move(node)};
}

CdvcsState apply_downstream(CdvcsState state, const DownstreamOp& op) {
  state.apply(op);
  return state;
}

CdvcsState state_merge(CdvcsState state, const CdvcsState& other) {
  state.merge_from(other);
  return state;
}

std::optional<Heads> conflicts(const CdvcsState& state, const BranchId& branch) {
  const auto& heads = state.heads(branch);
  if (heads.size() > 1) return heads;
  return std::nullopt;
}

std::vector<DownstreamOp> as_downstream_ops(const CdvcsState& state) {
  std::vector<DownstreamOp> ops;
  for (const auto& [branch, heads] : state.branches()) {
    ops.push_back(DownstreamOp{branch, ops.empty() ? state.graph().as_fragment() : GraphFragment{}, heads});
  }
  return ops;
}

std::vector<std::string> check_invariants(const CdvcsState& state) {
  std::vector<std::string> problems;
  const auto& graph = state.graph();
  for (const auto& [id, entry] : graph) {
    for (const auto& p : entry.parents) {
      if (!graph.contains(p)) problems.push_back("dangling parent " + p.short_hex() + " of " + id.short_hex());
      else if (graph.find(p)->generation >= entry.generation) problems.push_back("generation order at " + id.short_hex());
    }
  }
  if (state.branches().empty()) problems.push_back("no branches");
  for (const auto& [branch, heads] : state.branches()) {
    if (heads.empty()) problems.push_back("branch '" + branch + "' has no heads");
    for (const auto& h : heads) {
      if (!graph.contains(h)) {
        problems.push_back("head " + h.short_hex() + " of '" + branch + "' outside graph");
        return problems;
      }
    }
    if (heads.size() < 2) continue;
    for (const auto& h : heads) {
      // Proper ancestors of h by plain reachability.
      std::unordered_set<CommitId, DigestHash> seen;
      std::vector<CommitId> work(graph.parents(h).begin(), graph.parents(h).end());
      while (!work.empty()) {
        const auto id = work.back();
        work.pop_back();
        if (!seen.insert(id).second) continue;
        for (const auto& p : graph.parents(id)) work.push_back(p);
      }
      for (const auto& other : heads) {
        if (other != h && seen.contains(other)) {
          problems.push_back("head " + other.short_hex() + " of '" + branch + "' is an ancestor of " + h.short_hex());
        }
      }
    }
  }
  return problems;
}

}  // namespace cdvcs
