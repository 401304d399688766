#include "cdvcs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"
#include "cdvcs/peer.hpp"
#include "cdvcs/simnet.hpp"
#include "cdvcs/transaction.hpp"

namespace cdvcs::harness {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Bytes put_txn(std::uint64_t key) {
  return Transaction{"put", {{"key", std::to_string(key)}}}.encode();
}

// Same graph, but `branch` lists a head together with one of its parents.
CdvcsState with_ancestor_head(const CdvcsState& state) {
  for (const auto& [branch, heads] : state.branches()) {
    for (const auto& h : heads) {
      const auto& parents = state.graph().parents(h);
      if (parents.empty()) continue;
      Writer w;
      w.u8('S');
      w.u8(1);
      w.u32(static_cast<std::uint32_t>(state.graph().size()));
      for (const auto& [id, entry] : state.graph()) {
        w.digest(id);
        w.u32(static_cast<std::uint32_t>(entry.parents.size()));
        for (const auto& p : entry.parents) w.digest(p);
      }
      w.u32(static_cast<std::uint32_t>(state.branches().size()));
      for (const auto& [name, hs] : state.branches()) {
        w.str(name);
        Heads out = hs;
        if (name == branch) out.insert(parents.front());
        w.u32(static_cast<std::uint32_t>(out.size()));
        for (const auto& x : out) w.digest(x);
      }
      return CdvcsState::decode(w.data());
    }
  }
  throw Error(ErrorCode::ConfigError, "no head with a parent to corrupt");
}

}  // namespace

std::vector<double> decile_medians(const std::vector<BenchRecord>& records) {
  std::vector<double> out;
  if (records.size() < 10) return out;
  for (std::size_t d = 0; d < 10; ++d) {
    const auto lo = records.size() * d / 10;
    const auto hi = records.size() * (d + 1) / 10;
    std::vector<double> lat;
    for (auto i = lo; i < hi; ++i) lat.push_back(records[i].latency_us);
    out.push_back(median(std::move(lat)));
  }
  return out;
}

BenchSummary bench_commit(std::size_t n, std::ostream& csv, std::shared_ptr<ValueStore> store) {
  using clock = std::chrono::steady_clock;
  const CrdtId repo = "bench";
  const BranchId branch = "main";

  Peer peer("bench", std::move(store));
  peer.create_cdvcs(repo, CommitNode{{}, {}, {{"name", "bench"}}}, branch);

  std::vector<BenchRecord> records;
  records.reserve(n);
  csv << kBenchCsvHeader << '\n';
  const auto started = clock::now();
  char line[128];
  try {
    for (std::size_t i = 1; i <= n; ++i) {
      upstream::Commit call{branch, {put_txn(i)}, {}};
      const auto t0 = clock::now();
      peer.local_upstream(repo, call);
      const auto t1 = clock::now();
      BenchRecord r{i, std::chrono::duration<double, std::micro>(t1 - t0).count(), peer.last_touched_buckets().size(),
                    peer.cdvcs(repo).graph().size()};
      std::snprintf(line, sizeof line, "%llu,%.3f,%zu,%zu\n", static_cast<unsigned long long>(r.commit_index),
                    r.latency_us, r.touched_buckets, r.graph_size);
      csv << line;
      if (i % 1000 == 0) csv.flush();
      records.push_back(r);
    }
  } catch (...) {
    csv.flush();
    throw;
  }
  csv.flush();

  BenchSummary s;
  s.commits = records.size();
  s.total_seconds = std::chrono::duration<double>(clock::now() - started).count();
  s.decile_median_us = decile_medians(records);
  for (const auto& r : records) {
    if (r.commit_index > 100) s.max_touched_after_100 = std::max(s.max_touched_after_100, r.touched_buckets);
  }
  if (!s.decile_median_us.empty() && s.decile_median_us.front() > 0) {
    s.last_to_first_decile = s.decile_median_us.back() / s.decile_median_us.front();
  }
  return s;
}

std::vector<std::string> verify_replicas(const std::vector<const CdvcsState*>& replicas) {
  std::vector<std::string> problems;
  if (replicas.empty()) return problems;
  const Bytes reference = replicas.front()->encode();
  for (std::size_t i = 0; i < replicas.size(); ++i) {
    if (i > 0 && replicas[i]->encode() != reference) {
      problems.push_back("replica " + std::to_string(i) + " differs from replica 0");
    }
    for (const auto& p : check_invariants(*replicas[i])) {
      problems.push_back("replica " + std::to_string(i) + ": " + p);
    }
  }
  return problems;
}

FuzzResult fuzz_converge(const FuzzConfig& config, std::uint64_t seed) {
  if (config.replicas < 2) throw Error(ErrorCode::ConfigError, "need at least two replicas");
  if (config.partition_epoch == 0) throw Error(ErrorCode::ConfigError, "partition epoch must be positive");
  const std::vector<CrdtId> repos{"repo-a", "repo-b"};
  const std::vector<BranchId> branches{"master", "dev"};

  FuzzResult result;
  result.seed = seed;
  sim::Rng rng(seed);

  std::vector<PeerId> ids;
  for (std::size_t i = 0; i < config.replicas; ++i) ids.push_back("r" + std::to_string(i));

  sim::SimConfig sc;
  sc.seed = rng.next();
  sc.latency_min = 1;
  sc.latency_max = std::max<Tick>(1, config.latency_max);
  for (Tick t = 1; t <= config.ops; t += config.partition_epoch) {
    if (!rng.chance(config.partition_prob)) continue;
    std::set<PeerId> side;
    while (side.empty() || side.size() == ids.size()) {
      side.clear();
      for (const auto& id : ids) {
        if (rng.chance(0.5)) side.insert(id);
      }
    }
    sc.partitions.push_back({t, t + config.partition_epoch, side});
  }
  result.partitions = sc.partitions.size();

  sim::Simnet net(sc);
  const CommitNode root{{}, {}, {{"name", "fuzz"}}};
  for (const auto& id : ids) {
    auto& p = net.add_peer(id);
    for (const auto& repo : repos) {
      p.create_cdvcs(repo, root, branches[0]);
      p.local_upstream(repo, upstream::Branch{branches[1], root.id()});
    }
  }
  // Ring plus random chords.
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) net.connect(ids[i], ids[i + 1]);
  if (ids.size() > 2) net.connect(ids.back(), ids.front());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 2; j < ids.size(); ++j) {
      if (!(i == 0 && j + 1 == ids.size()) && rng.chance(0.3)) net.connect(ids[i], ids[j]);
    }
  }

  auto fail = [&](std::string why) {
    result.passed = false;
    result.failure = std::move(why);
    std::ostringstream os;
    net.write_trace(os);
    result.trace = os.str();
    result.messages = net.counters().delivered;
    result.ticks = net.now();
    return result;
  };

  try {
    for (std::size_t i = 0; i < config.ops; ++i) {
      net.run_until(i + 1);
      const auto& who = ids[rng.below(ids.size())];
      const auto& repo = repos[rng.below(repos.size())];
      const auto& branch = branches[rng.below(branches.size())];
      const double u = rng.unit();
      auto& peer = net.peer(who);

      auto merge = [&](const CrdtId& c, const BranchId& b) {
        net.local(who, c, upstream::Merge{b, {}, {}, {}});
        ++result.merges;
      };
      auto conflicted = [&](const CrdtId& c, const BranchId& b) { return peer.cdvcs(c).heads(b).size() > 1; };

      if (u < 0.85 && u >= 0.70) {
        bool merged = false;
        for (const auto& c : repos) {
          for (const auto& b : branches) {
            if (!merged && conflicted(c, b)) {
              merge(c, b);
              merged = true;
            }
          }
        }
        if (merged) continue;
      }
      // Commits and pulls need a single head: resolve first.
      if (conflicted(repo, branch)) merge(repo, branch);
      if (u >= 0.85) {
        CrdtId source = repo;
        BranchId from = branch;
        if (rng.chance(0.5)) {
          source = repo == repos[0] ? repos[1] : repos[0];
        } else {
          from = branch == branches[0] ? branches[1] : branches[0];
        }
        const auto& heads = peer.cdvcs(source).heads(from);
        auto it = heads.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.below(heads.size())));
        net.local(who, repo, upstream::Pull{branch, source, *it});
        ++result.pulls;
        continue;
      }
      net.local(who, repo, upstream::Commit{branch, {put_txn(i)}, {}});
      ++result.commits;
    }
    net.heal_all();
    net.run_until_quiescent(config.quiescence_budget);
  } catch (const Error& e) {
    return fail(std::string("error during run: ") + e.what());
  }

  if (config.fault == Fault::Divergence) {
    auto& p = net.peer(ids.front());
    if (p.cdvcs(repos[0]).heads(branches[0]).size() > 1) {
      p.local_upstream(repos[0], upstream::Merge{branches[0], {}, {}, {}});
    } else {
      p.local_upstream(repos[0], upstream::Commit{branches[0], {put_txn(config.ops)}, {}});
    }
  }

  std::vector<std::string> problems;
  for (const auto& repo : repos) {
    std::vector<const CdvcsState*> states;
    for (const auto& id : ids) states.push_back(&net.peer(id).cdvcs(repo));
    std::optional<CdvcsState> corrupt;
    if (config.fault == Fault::InvariantViolation && repo == repos[0]) {
      corrupt = with_ancestor_head(*states.front());
      states.front() = &*corrupt;
    }
    for (auto& p : verify_replicas(states)) problems.push_back(repo + ": " + p);
    for (const auto& id : ids) {
      const auto& st = net.peer(id).cdvcs(repo);
      const auto missing = missing_refs(net.peer(id).store(), DownstreamOp{"", st.graph().as_fragment(), {}});
      if (!missing.empty()) {
        problems.push_back(repo + ": " + id + " store lacks " + std::to_string(missing.size()) + " values");
      }
    }
  }
  for (const auto& id : ids) result.atomicity_violations += net.peer(id).stats().atomicity_violations;
  if (result.atomicity_violations > 0) {
    problems.push_back(std::to_string(result.atomicity_violations) + " atomicity violations");
  }
  if (!problems.empty()) {
    std::string why;
    for (const auto& p : problems) why += (why.empty() ? "" : "; ") + p;
    return fail(why);
  }
  result.passed = true;
  result.messages = net.counters().delivered;
  result.ticks = net.now();
  return result;
}

}  // namespace cdvcs::harness
