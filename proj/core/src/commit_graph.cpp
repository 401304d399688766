#include "cdvcs/commit_graph.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {

constexpr std::uint8_t kCommitTag = 0x43;  // 'C'
constexpr std::uint8_t kCommitVersion = 1;

}  // namespace

Bytes CommitNode::encode() const {
  Writer w;
  w.u8(kCommitTag);
  w.u8(kCommitVersion);
  w.u32(static_cast<std::uint32_t>(parents.size()));
  for (const auto& p : parents) w.digest(p);
  w.u32(static_cast<std::uint32_t>(txn_refs.size()));
  for (const auto& t : txn_refs) w.digest(t);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.str(v);
  }
  return std::move(w).take();
}

CommitNode CommitNode::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kCommitTag || r.u8() != kCommitVersion) {
    throw Error(ErrorCode::ProtocolError, "not a commit node encoding");
  }
  CommitNode node;
  for (auto n = r.count(Digest::kSize); n > 0; --n) node.parents.push_back(r.digest());
  for (auto n = r.count(Digest::kSize); n > 0; --n) node.txn_refs.push_back(r.digest());
  for (auto n = r.count(8); n > 0; --n) {
    auto k = r.str();
    auto v = r.str();
    if (!node.meta.empty() && k <= node.meta.rbegin()->first) {
      throw Error(ErrorCode::ProtocolError, "commit meta keys not strictly ordered");
    }
    node.meta.emplace(std::move(k), std::move(v));
  }
  r.expect_done();
  std::set<CommitId> unique(node.parents.begin(), node.parents.end());
  if (unique.size() != node.parents.size()) throw Error(ErrorCode::ProtocolError, "duplicate commit parent");
  return node;
}

CommitId CommitNode::id() const { return sha256(encode()); }

const CommitGraph::Entry* CommitGraph::find(const CommitId& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const std::vector<CommitId>& CommitGraph::parents(const CommitId& id) const {
  if (const auto* e = find(id)) return e->parents;
  throw Error(ErrorCode::UnknownCommit, id.hex());
}

std::vector<CommitId> CommitGraph::add(const GraphFragment& fragment) {
  // Order the novel part of the fragment parents-first before touching the
  // graph, so a dangling parent or a cycle leaves the graph unchanged.
  std::vector<CommitId> order;
  std::unordered_map<CommitId, std::uint8_t, DigestHash> mark;  // 1 = in progress, 2 = done
  for (const auto& [root_id, root_parents] : fragment) {
    if (contains(root_id) || mark.contains(root_id)) continue;
    std::vector<std::pair<CommitId, std::size_t>> stack{{root_id, 0}};
    mark[root_id] = 1;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& ps = fragment.at(id);
      if (next < ps.size()) {
        const CommitId p = ps[next++];
        if (contains(p)) continue;
        auto m = mark.find(p);
        if (m != mark.end()) {
          if (m->second == 1) throw Error(ErrorCode::MissingDependency, "cycle through " + p.hex());
          continue;
        }
        if (!fragment.contains(p)) throw Error(ErrorCode::MissingDependency, "missing parent " + p.hex());
        mark[p] = 1;
        stack.emplace_back(p, 0);
      } else {
        mark[id] = 2;
        order.push_back(id);
        stack.pop_back();
      }
    }
  }
  for (const auto& id : order) {
    Entry e{fragment.at(id), 1};
    for (const auto& p : e.parents) e.generation = std::max(e.generation, nodes_.at(p).generation + 1);
    nodes_.emplace(id, std::move(e));
  }
  return order;
}

std::vector<CommitId> CommitGraph::merge(const CommitGraph& other) {
  std::vector<CommitId> added;
  for (const auto& [id, entry] : other.nodes_) {
    if (nodes_.emplace(id, entry).second) added.push_back(id);
  }
  // Parents-first order for callers that persist or forward the novelty.
  std::sort(added.begin(), added.end(), [this](const CommitId& a, const CommitId& b) {
    const auto ga = nodes_.at(a).generation, gb = nodes_.at(b).generation;
    return ga != gb ? ga < gb : a < b;
  });
  return added;
}

GraphFragment CommitGraph::fragment(const std::vector<CommitId>& ids) const {
  GraphFragment out;
  for (const auto& id : ids) out.emplace(id, parents(id));
  return out;
}

GraphFragment CommitGraph::as_fragment() const {
  GraphFragment out;
  for (const auto& [id, e] : nodes_) out.emplace_hint(out.end(), id, e.parents);
  return out;
}

bool CommitGraph::operator==(const CommitGraph& other) const {
  return std::equal(nodes_.begin(), nodes_.end(), other.nodes_.begin(), other.nodes_.end(),
                    [](const auto& a, const auto& b) { return a.first == b.first && a.second.parents == b.second.parents; });
}

namespace {

constexpr std::uint8_t kSideA = 1;
constexpr std::uint8_t kSideB = 2;
constexpr std::uint8_t kStale = 4;
constexpr std::uint8_t kDone = 8;

const CommitGraph::Entry* find_in(const CommitGraph& a, const CommitGraph& b, const CommitId& id) {
  if (const auto* e = a.find(id)) return e;
  return b.find(id);
}

// Paint-down over the union of two graphs. A node is popped only after every
// queued node of higher generation, hence after all of its painted children,
// so its flags are final when popped. Common nodes pass kStale to their
// ancestors; the walk ends once every queued node is stale.
LcaResult paint(const CommitGraph& graph_a, const CommitId& start_a, const CommitGraph& graph_b,
                const CommitId& start_b) {
  const auto* entry_a = graph_a.find(start_a);
  if (!entry_a) throw Error(ErrorCode::UnknownCommit, start_a.hex());
  const auto* entry_b = graph_b.find(start_b);
  if (!entry_b) throw Error(ErrorCode::UnknownCommit, start_b.hex());

  using Item = std::pair<std::uint64_t, CommitId>;
  std::priority_queue<Item> queue;
  std::unordered_map<CommitId, std::uint8_t, DigestHash> flags;
  std::size_t live = 0;  // queued, not yet popped, not stale

  auto paint_node = [&](const CommitId& id, std::uint64_t generation, std::uint8_t add) {
    auto [it, fresh] = flags.try_emplace(id, 0);
    const std::uint8_t before = it->second;
    it->second |= add;
    if (fresh) {
      queue.emplace(generation, id);
      if (!(it->second & kStale)) ++live;
    } else if (!(before & kDone) && !(before & kStale) && (it->second & kStale)) {
      --live;
    }
  };

  paint_node(start_a, entry_a->generation, kSideA);
  paint_node(start_b, entry_b->generation, kSideB);

  LcaResult result;
  while (live > 0) {
    const CommitId id = queue.top().second;
    queue.pop();
    std::uint8_t& f = flags[id];
    if (!(f & kStale)) --live;
    f |= kDone;
    std::uint8_t pass = f & (kSideA | kSideB | kStale);
    if ((f & (kSideA | kSideB)) == (kSideA | kSideB)) {
      if (!(f & kStale)) result.ancestors.insert(id);
      pass |= kStale;
    }
    const auto* entry = find_in(graph_a, graph_b, id);
    for (const auto& p : entry->parents) {
      const auto* pe = find_in(graph_a, graph_b, p);
      if (!pe) throw Error(ErrorCode::UnknownCommit, "dangling parent " + p.hex());
      paint_node(p, pe->generation, pass);
    }
  }
  for (const auto& [id, f] : flags) {
    if (f & kSideA) result.visited_a.insert(id);
    if (f & kSideB) result.visited_b.insert(id);
  }
  return result;
}

}  // namespace

LcaResult lca(const CommitGraph& graph_a, const CommitId& start_a, const CommitGraph& graph_b,
              const CommitId& start_b) {
  auto result = paint(graph_a, start_a, graph_b, start_b);
  if (result.ancestors.empty()) {
    throw Error(ErrorCode::NoCommonAncestor, start_a.short_hex() + " / " + start_b.short_hex());
  }
  return result;
}

namespace {

// Every node reachable through parents from `starts`, skipping nodes whose
// generation is below `floor` (they cannot lead back up to anything at or
// above it).
template <class Visit>
void walk_down(const CommitGraph& graph, std::vector<CommitId> starts, std::uint64_t floor, Visit&& visit) {
  std::unordered_set<CommitId, DigestHash> seen;
  while (!starts.empty()) {
    const auto id = starts.back();
    starts.pop_back();
    const auto* e = graph.find(id);
    if (e->generation < floor || !seen.insert(id).second) continue;
    visit(id);
    starts.insert(starts.end(), e->parents.begin(), e->parents.end());
  }
}

}  // namespace

bool is_ancestor(const CommitGraph& graph, const CommitId& ancestor, const CommitId& descendant) {
  const auto* a = graph.find(ancestor);
  const auto* d = graph.find(descendant);
  if (!a) throw Error(ErrorCode::UnknownCommit, ancestor.hex());
  if (!d) throw Error(ErrorCode::UnknownCommit, descendant.hex());
  if (ancestor == descendant) return true;
  if (a->generation >= d->generation) return false;
  bool found = false;
  walk_down(graph, d->parents, a->generation, [&](const CommitId& id) { found = found || id == ancestor; });
  return found;
}

Heads remove_ancestors(const CommitGraph& graph, const Heads& heads) {
  std::uint64_t floor = UINT64_MAX;
  std::vector<CommitId> starts;
  for (const auto& h : heads) {
    const auto* e = graph.find(h);
    if (!e) throw Error(ErrorCode::UnknownCommit, h.hex());
    floor = std::min(floor, e->generation);
    starts.insert(starts.end(), e->parents.begin(), e->parents.end());
  }
  if (heads.size() < 2) return heads;
  Heads out = heads;
  walk_down(graph, std::move(starts), floor, [&](const CommitId& id) { out.erase(id); });
  return out;
}

std::vector<CommitId> commit_history(const CommitGraph& graph, const CommitId& c) {
  if (!graph.contains(c)) throw Error(ErrorCode::UnknownCommit, c.hex());
  std::vector<CommitId> out;
  std::unordered_set<CommitId, DigestHash> entered{c};
  std::vector<std::pair<CommitId, std::size_t>> stack{{c, 0}};
  while (!stack.empty()) {
    auto& [id, next] = stack.back();
    const auto& ps = graph.parents(id);
    if (next < ps.size()) {
      const CommitId p = ps[next++];
      if (entered.insert(p).second) stack.emplace_back(p, 0);
    } else {
      out.push_back(id);
      stack.pop_back();
    }
  }
  return out;
}

}  // namespace cdvcs
