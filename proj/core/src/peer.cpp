#include "cdvcs/peer.hpp"

#include <algorithm>

#include "cdvcs/error.hpp"

namespace cdvcs {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

PeerMessage message(const CrdtId& crdt, const PeerId& origin, MessageBody body) {
  return PeerMessage{crdt, origin, std::move(body)};
}

}  // namespace

Peer::Peer(PeerId id, std::shared_ptr<ValueStore> store, PeerOptions options)
    : id_(std::move(id)), store_(std::move(store)), options_(options) {
  if (id_.empty()) throw Error(ErrorCode::ConfigError, "peer id must not be empty");
  if (!store_) throw Error(ErrorCode::ConfigError, "peer needs a store");
}

void Peer::create_cdvcs(const CrdtId& crdt, const CommitNode& root, const BranchId& branch) {
  auto state = new_cdvcs(root, branch);
  store_->put(root.encode());
  last_touched_ = store_->persist_graph_delta(state.graph().as_fragment());
  crdts_.insert_or_assign(crdt, std::move(state));
}

void Peer::create_orset(const CrdtId& crdt) { crdts_.insert_or_assign(crdt, OrSetState{}); }

std::vector<CrdtId> Peer::crdt_ids() const {
  std::vector<CrdtId> ids;
  for (const auto& [id, s] : crdts_) ids.push_back(id);
  return ids;
}

const CrdtState& Peer::crdt(const CrdtId& crdt) const {
  auto it = crdts_.find(crdt);
  if (it == crdts_.end()) throw Error(ErrorCode::UnknownCrdt, crdt);
  return it->second;
}

const CdvcsState& Peer::cdvcs(const CrdtId& id) const {
  const auto* s = std::get_if<CdvcsState>(&crdt(id));
  if (!s) throw Error(ErrorCode::UnknownCrdt, id + " is not a CDVCS");
  return *s;
}

const OrSetState& Peer::orset(const CrdtId& id) const {
  const auto* s = std::get_if<OrSetState>(&crdt(id));
  if (!s) throw Error(ErrorCode::UnknownCrdt, id + " is not an OR-set");
  return *s;
}

CrdtState& Peer::state_of(const CrdtId& crdt) { return const_cast<CrdtState&>(std::as_const(*this).crdt(crdt)); }
CdvcsState& Peer::cdvcs_of(const CrdtId& crdt) { return const_cast<CdvcsState&>(std::as_const(*this).cdvcs(crdt)); }
OrSetState& Peer::orset_of(const CrdtId& crdt) { return const_cast<OrSetState&>(std::as_const(*this).orset(crdt)); }

void Peer::add_pull_hook(PullHook hook) { hooks_.push_back(std::move(hook)); }

std::vector<Outgoing> Peer::connect_to(const PeerId& neighbor, const std::vector<CrdtId>& crdts) {
  if (neighbor == id_) throw Error(ErrorCode::ConfigError, "peer " + id_ + " cannot connect to itself");
  std::vector<Outgoing> out;
  for (const auto& crdt : crdts.empty() ? crdt_ids() : crdts) {
    out.push_back({neighbor, message(crdt, id_, SubscribeBody{})});
  }
  return out;
}

std::vector<Outgoing> Peer::sync_with(const PeerId& neighbor) const {
  std::vector<Outgoing> out;
  for (const auto& [crdt, state] : crdts_) out.push_back({neighbor, message(crdt, id_, StateSyncRequestBody{})});
  return out;
}

Peer::DepScan Peer::scan_dependencies(const CommitGraph* local, const GraphFragment& declared, const Heads& heads,
                                      GraphFragment& extra) {
  DepScan scan;
  std::vector<CommitId> work;
  for (const auto& [id, parents] : declared) work.push_back(id);
  work.insert(work.end(), heads.begin(), heads.end());
  std::set<CommitId> seen;
  while (!work.empty()) {
    const auto id = work.back();
    work.pop_back();
    if (!seen.insert(id).second) continue;
    if (local && local->contains(id)) continue;
    const std::vector<CommitId>* listed = nullptr;
    if (auto it = declared.find(id); it != declared.end()) listed = &it->second;
    else if (auto jt = extra.find(id); jt != extra.end()) listed = &jt->second;

    auto known = decoded_.find(id);
    if (known == decoded_.end()) {
      if (!store_->has(id)) {
        scan.missing.insert(id);
        if (listed) work.insert(work.end(), listed->begin(), listed->end());
        continue;
      }
      try {
        known = decoded_.emplace(id, CommitNode::decode(store_->get(id))).first;
      } catch (const Error&) {
        scan.malformed = true;
        return scan;
      }
    }
    const CommitNode& node = known->second;
    if (listed && *listed != node.parents) {
      scan.malformed = true;
      return scan;
    }
    if (!listed) extra.emplace(id, node.parents);
    for (const auto& ref : node.txn_refs) {
      if (!store_->has(ref)) scan.missing.insert(ref);
    }
    work.insert(work.end(), node.parents.begin(), node.parents.end());
  }
  return scan;
}

bool Peer::refs_present(const CommitGraph* local, const GraphFragment& nodes) {
  DownstreamOp novel;
  for (const auto& [id, parents] : nodes) {
    if (!local || !local->contains(id)) novel.added_graph.emplace(id, parents);
  }
  try {
    if (missing_refs(*store_, novel).empty()) return true;
  } catch (const Error&) {
  }
  ++stats_.atomicity_violations;
  return false;
}

void Peer::broadcast(const CrdtId& crdt, const CrdtDelta& op, const PeerId& except, std::vector<Outgoing>& out) {
  for (const auto& [neighbor, crdts] : subscriptions_) {
    if (neighbor == except || !crdts.contains(crdt)) continue;
    out.push_back({neighbor, message(crdt, id_, PublishBody{op})});
  }
}

void Peer::apply_op(const CrdtId& crdt, const CrdtDelta& op, const Digest& digest, const PeerId& except,
                    std::vector<Outgoing>& out) {
  auto& state = state_of(crdt);
  bool changed = false;
  if (const auto* d = std::get_if<DownstreamOp>(&op)) {
    auto& cdvcs = std::get<CdvcsState>(state);
    if (!refs_present(&cdvcs.graph(), d->added_graph)) return;
    GraphFragment novel;
    for (const auto& [id, parents] : d->added_graph) {
      if (!cdvcs.graph().contains(id)) novel.emplace(id, parents);
    }
    changed = cdvcs.apply(*d);
    last_touched_ = store_->persist_graph_delta(novel);
  } else {
    changed = apply_delta(state, op);
  }
  applied_.insert(digest);
  ++stats_.applied_ops;
  if (changed) broadcast(crdt, op, except, out);
}

void Peer::apply_state(const CrdtId& crdt, const CrdtState& remote, const PeerId& except,
                       std::vector<Outgoing>& out) {
  std::vector<CrdtDelta> novelty;
  auto it = crdts_.find(crdt);
  if (const auto* theirs = std::get_if<CdvcsState>(&remote)) {
    const CdvcsState* mine = it == crdts_.end() ? nullptr : &std::get<CdvcsState>(it->second);
    GraphFragment novel;
    for (const auto& [id, entry] : theirs->graph()) {
      if (!mine || !mine->graph().contains(id)) novel.emplace(id, entry.parents);
    }
    if (!refs_present(mine ? &mine->graph() : nullptr, novel)) return;
    const auto before = mine ? mine->branches() : std::map<BranchId, Heads>{};
    if (!mine) {
      it = crdts_.emplace(crdt, CdvcsState{}).first;
    }
    auto& state = std::get<CdvcsState>(it->second);
    if (!mine) {
      state = *theirs;
      if (!except.empty()) out.push_back({except, message(crdt, id_, SubscribeBody{})});
    } else {
      state.merge_from(*theirs);
    }
    last_touched_ = store_->persist_graph_delta(novel);
    for (const auto& [branch, heads] : state.branches()) {
      auto prev = before.find(branch);
      if (prev != before.end() && prev->second == heads) continue;
      novelty.push_back(DownstreamOp{branch, novel, heads});
    }
    if (novelty.empty() && !novel.empty()) novelty.push_back(DownstreamOp{state.branches().begin()->first, novel, {}});
  } else {
    const auto& other = std::get<OrSetState>(remote);
    if (it == crdts_.end()) {
      it = crdts_.emplace(crdt, OrSetState{}).first;
      if (!except.empty()) out.push_back({except, message(crdt, id_, SubscribeBody{})});
    }
    if (std::get<OrSetState>(it->second).merge_from(other)) novelty.push_back(as_delta(other));
  }
  ++stats_.state_syncs_applied;
  for (const auto& op : novelty) {
    applied_.insert(delta_digest(crdt, op));
    broadcast(crdt, op, except, out);
  }
}

bool Peer::try_complete(Pending& p, std::vector<Outgoing>& out) {
  auto it = crdts_.find(p.crdt);
  const bool known = it != crdts_.end();

  if (auto* remote = std::get_if<CrdtState>(&p.item)) {
    if (known && it->second.index() != remote->index()) {
      ++stats_.protocol_errors;
      return true;
    }
    if (const auto* theirs = std::get_if<CdvcsState>(remote)) {
      const CommitGraph* local = known ? &std::get<CdvcsState>(it->second).graph() : nullptr;
      GraphFragment declared;
      for (const auto& [id, entry] : theirs->graph()) {
        if (!local || !local->contains(id)) declared.emplace(id, entry.parents);
      }
      auto scan = scan_dependencies(local, declared, {}, p.extra);
      if (scan.malformed) {
        ++stats_.protocol_errors;
        return true;
      }
      if (!scan.missing.empty()) {
        p.waiting = scan.missing;
        std::vector<HashRef> ask;
        for (const auto& ref : scan.missing) {
          if (p.requested.insert(ref).second) ask.push_back(ref);
        }
        if (!ask.empty()) {
          ++stats_.fetch_requests_sent;
          out.push_back({p.from, message(p.crdt, id_, FetchRequestBody{std::move(ask)})});
        }
        return false;
      }
    }
    apply_state(p.crdt, *remote, p.from, out);
    return true;
  }

  if (!known) {
    ++stats_.ignored_messages;
    return true;
  }
  CrdtDelta op = std::get<CrdtDelta>(p.item);
  if (op.index() != it->second.index()) {
    ++stats_.protocol_errors;
    return true;
  }

  auto resolve = [&](DownstreamOp& d, GraphFragment& extra, bool fetch) -> std::optional<bool> {
    const auto& local = std::get<CdvcsState>(it->second).graph();
    auto scan = scan_dependencies(&local, d.added_graph, d.added_heads, extra);
    if (scan.malformed) {
      ++stats_.protocol_errors;
      return true;
    }
    if (!scan.missing.empty()) {
      if (!fetch) {
        ++stats_.protocol_errors;
        return true;
      }
      p.waiting = scan.missing;
      std::vector<HashRef> ask;
      for (const auto& ref : scan.missing) {
        if (p.requested.insert(ref).second) ask.push_back(ref);
      }
      if (!ask.empty()) {
        ++stats_.fetch_requests_sent;
        out.push_back({p.from, message(p.crdt, id_, FetchRequestBody{std::move(ask)})});
      }
      return false;
    }
    d.added_graph.insert(extra.begin(), extra.end());
    return std::nullopt;
  };

  if (auto* d = std::get_if<DownstreamOp>(&op)) {
    if (auto done = resolve(*d, p.extra, true)) return *done;
  }

  bool replaced = false;
  for (const auto& hook : hooks_) {
    const auto decision = hook(HookContext{p.crdt, p.from, op, it->second, *store_});
    if (decision.verdict == Verdict::Reject) {
      ++stats_.rejected_ops;
      return true;
    }
    if (decision.verdict == Verdict::Replace) {
      if (!decision.replacement || decision.replacement->index() != op.index()) {
        ++stats_.protocol_errors;
        return true;
      }
      op = *decision.replacement;
      replaced = true;
      if (auto* d = std::get_if<DownstreamOp>(&op)) {
        GraphFragment extra;
        if (auto done = resolve(*d, extra, false)) return *done;
      }
    }
  }
  if (replaced) {
    ++stats_.replaced_ops;
    applied_.insert(p.digest);
  }
  try {
    apply_op(p.crdt, op, replaced ? delta_digest(p.crdt, op) : p.digest, p.from, out);
  } catch (const Error&) {
    ++stats_.protocol_errors;
  }
  return true;
}

void Peer::enqueue(Pending p, std::vector<Outgoing>& out) {
  if (try_complete(p, out)) return;
  pending_.push_back(std::move(p));
  if (pending_.size() > options_.max_pending) {
    pending_.pop_front();
    ++stats_.dropped_pending;
  }
}

void Peer::drain_pending(std::vector<Outgoing>& out) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    const bool progressed =
        std::any_of(it->waiting.begin(), it->waiting.end(), [&](const HashRef& ref) { return store_->has(ref); });
    if (progressed && try_complete(*it, out)) {
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<Outgoing> Peer::handle_message(const PeerMessage& msg, Tick now) {
  if (msg.origin.empty() || msg.origin == id_) throw Error(ErrorCode::ProtocolError, "bad message origin");
  const PeerId& from = msg.origin;
  std::vector<Outgoing> out;
  std::visit(
      Overloaded{
          [&](const SubscribeBody&) {
            subscriptions_[from].insert(msg.crdt_id);
            out.push_back({from, message(msg.crdt_id, id_, StateSyncRequestBody{})});
          },
          [&](const StateSyncRequestBody&) {
            if (auto it = crdts_.find(msg.crdt_id); it != crdts_.end()) {
              out.push_back({from, message(msg.crdt_id, id_, StateSyncResponseBody{it->second})});
            }
          },
          [&](const StateSyncResponseBody& b) {
            enqueue(Pending{msg.crdt_id, from, b.state, {}, {}, {}, {}, now}, out);
          },
          [&](const PublishBody& b) {
            if (!crdts_.contains(msg.crdt_id)) {
              ++stats_.ignored_messages;
              return;
            }
            const auto digest = delta_digest(msg.crdt_id, b.op);
            const bool queued = std::any_of(pending_.begin(), pending_.end(),
                                            [&](const Pending& p) { return p.item.index() == 0 && p.digest == digest; });
            if (applied_.contains(digest) || queued) {
              ++stats_.duplicate_ops;
              return;
            }
            enqueue(Pending{msg.crdt_id, from, b.op, digest, {}, {}, {}, now}, out);
          },
          [&](const FetchRequestBody& b) {
            FetchResponseBody resp;
            for (const auto& ref : b.refs) {
              if (!store_->has(ref)) continue;
              try {
                resp.values.emplace_back(ref, store_->get(ref));
              } catch (const Error&) {
                ++stats_.integrity_failures;
              }
            }
            if (!resp.values.empty()) out.push_back({from, message(msg.crdt_id, id_, std::move(resp))});
          },
          [&](const FetchResponseBody& b) {
            for (const auto& [ref, value] : b.values) {
              if (sha256(value) != ref) {
                ++stats_.integrity_failures;
                continue;
              }
              store_->put(value);
              ++stats_.values_fetched;
            }
            drain_pending(out);
          },
      },
      msg.body);
  return out;
}

Meta Peer::stamp(Meta meta) {
  meta.try_emplace("peer", id_);
  meta["seq"] = std::to_string(++local_seq_);
  return meta;
}

std::vector<Outgoing> Peer::local_upstream(const CrdtId& crdt, const UpstreamCall& call) {
  std::vector<Outgoing> out;
  auto finish = [&](CrdtDelta op) { apply_op(crdt, op, delta_digest(crdt, op), PeerId{}, out); };
  auto hash_all = [](const std::vector<Bytes>& txns) {
    std::vector<HashRef> refs;
    for (const auto& t : txns) refs.push_back(sha256(t));
    return refs;
  };
  auto store_all = [&](const std::vector<Bytes>& txns, const CommitNode& node) {
    for (const auto& t : txns) store_->put(t);
    store_->put(node.encode());
  };

  std::visit(
      Overloaded{
          [&](const upstream::Commit& c) {
            const auto& state = cdvcs(crdt);
            const auto& heads = state.heads(c.branch);
            CommitNode node{std::vector<CommitId>(heads.begin(), heads.end()), hash_all(c.txns), stamp(c.meta)};
            auto op = prepare_commit(state, c.branch, node);
            store_all(c.txns, node);
            finish(std::move(op));
          },
          [&](const upstream::Branch& b) { finish(prepare_branch(cdvcs(crdt), b.name, b.at)); },
          [&](const upstream::Pull& p) {
            auto op = prepare_pull(cdvcs(crdt), p.branch, cdvcs(p.source).graph(), p.remote_head);
            if (!op.empty()) finish(std::move(op));
          },
          [&](const upstream::Merge& m) {
            const auto& state = cdvcs(crdt);
            std::vector<CommitId> order = m.ordered_heads;
            if (order.empty()) {
              const auto& heads = state.heads(m.branch);
              order.assign(heads.begin(), heads.end());
            }
            auto [node, op] = prepare_merge(state, m.branch, order, MergePayload{hash_all(m.txns), stamp(m.meta)});
            store_all(m.txns, node);
            finish(std::move(op));
          },
          [&](const upstream::Add& a) { finish(prepare_add(orset(crdt), a.element, id_)); },
          [&](const upstream::Remove& r) { finish(prepare_remove(orset(crdt), r.element)); },
      },
      call);
  return out;
}

}  // namespace cdvcs
