// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cdvcs/error.hpp"
#include "cdvcs/harness.hpp"
#include "cdvcs/scenarios.hpp"
#include "cdvcs/store.hpp"
#include "oracles.hpp"

using namespace cdvcs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

// Shared between criteria 1 and 7.
std::uint64_t g_atomicity_violations = 0;
bool g_convergence_ran = false;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  harness::FuzzConfig cfg;
  cfg.replicas = 5;
  cfg.ops = 1000;
  cfg.partition_prob = 0.2;
  std::size_t ok = 0, partitions = 0;
  std::uint64_t messages = 0;
  std::string first_failure;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto r = harness::fuzz_converge(cfg, seed);
    g_atomicity_violations += r.atomicity_violations;
    partitions += r.partitions;
    messages += r.messages;
    if (r.passed) {
      ++ok;
    } else if (first_failure.empty()) {
      first_failure = " first failure: seed " + std::to_string(seed) + ": " + r.failure;
    }
  }
  g_convergence_ran = true;
  const double secs = seconds_since(t0);
  return {ok == 100 && secs < 300.0,
          std::to_string(ok) + "/100 seeds quiescent and byte-identical, " + std::to_string(partitions) +
              " partitions, " + std::to_string(messages) + " messages, " + fmt(secs, 1) + " s (limit 300 s)" +
              first_failure};
}

Outcome lca_oracle() {
  oracle::Rng rng(0x1ca);
  std::size_t dags = 0, lca_queries = 0, filter_queries = 0, mismatches = 0;
  for (; dags < 1000; ++dags) {
    const std::size_t n = 2 + rng.below(255);
    const std::size_t max_parents = 1 + rng.below(4);
    const std::size_t roots = rng.chance(0.1) ? 2 + rng.below(2) : 1;
    const auto dag = oracle::random_dag(rng, n, max_parents, std::min(roots, n));
    const oracle::Reachability reach(dag.graph);
    for (int q = 0; q < 4; ++q) {
      const auto& a = dag.nodes[rng.below(n)];
      const auto& b = dag.nodes[rng.below(n)];
      const auto expected = reach.lca(a, b);
      ++lca_queries;
      try {
        if (lca(dag.graph, a, dag.graph, b).ancestors != expected) ++mismatches;
      } catch (const Error& e) {
        if (!(expected.empty() && e.code() == ErrorCode::NoCommonAncestor)) ++mismatches;
      }
      Heads heads;
      for (std::size_t k = 0, m = 1 + rng.below(8); k < m; ++k) heads.insert(dag.nodes[rng.below(n)]);
      ++filter_queries;
      if (remove_ancestors(dag.graph, heads) != reach.remove_ancestors(heads)) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(dags) + " DAGs, " + std::to_string(lca_queries) + " lca and " +
                               std::to_string(filter_queries) + " remove_ancestors queries, " +
                               std::to_string(mismatches) + " mismatches"};
}

struct LawCount {
  std::size_t violations = 0;
  std::size_t nontrivial = 0;  // joins that differ from both inputs
};

template <class State, class Merge>
void check_laws(const std::vector<State>& fam, oracle::Rng& rng, std::size_t triples, Merge merge, LawCount& count) {
  for (std::size_t i = 0; i < triples; ++i) {
    const auto& a = fam[rng.below(fam.size())];
    const auto& b = fam[rng.below(fam.size())];
    const auto& c = fam[rng.below(fam.size())];
    const auto ab = merge(a, b).encode();
    count.violations += merge(a, a).encode() != a.encode();
    count.violations += ab != merge(b, a).encode();
    count.violations += merge(merge(a, b), c).encode() != merge(a, merge(b, c)).encode();
    count.nontrivial += ab != a.encode() && ab != b.encode();
  }
}

Outcome semilattice() {
  oracle::Rng rng(0x5e1);
  LawCount cd, os;
  for (int round = 0; round < 10; ++round) {
    const auto cf = oracle::cdvcs_family(rng, 60);
    check_laws(cf, rng, 50, [](const CdvcsState& x, const CdvcsState& y) { return state_merge(x, y); }, cd);
    const auto of = oracle::orset_family(rng, 60);
    check_laws(of, rng, 50, [](const OrSetState& x, const OrSetState& y) { return or_state_merge(x, y); }, os);
  }
  return {cd.violations == 0 && os.violations == 0,
          "500 triples each; violations: CDVCS " + std::to_string(cd.violations) + ", OR-set " +
              std::to_string(os.violations) + "; non-trivial joins: CDVCS " + std::to_string(cd.nontrivial) +
              ", OR-set " + std::to_string(os.nontrivial)};
}

Outcome benchmark() {
  const auto dir = fs::temp_directory_path() / ("cdvcs-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  std::ofstream csv("commit_bench.csv");
  harness::BenchSummary s;
  try {
    s = harness::bench_commit(100000, csv, std::make_shared<FileStore>(dir));
  } catch (const Error& e) {
    fs::remove_all(dir);
    return {false, std::string("benchmark aborted: ") + e.what()};
  }
  fs::remove_all(dir);
  const bool ok = s.commits == 100000 && s.decile_median_us.size() == 10 && s.last_to_first_decile <= 3.0 &&
                  s.max_touched_after_100 <= 2;
  return {ok, std::to_string(s.commits) + " commits (file store) in " + fmt(s.total_seconds, 1) +
                  " s, decile medians " + fmt(s.decile_median_us.front()) + " -> " +
                  fmt(s.decile_median_us.back()) + " us, ratio " + fmt(s.last_to_first_decile) +
                  " (limit 3), max touched buckets after 100 = " + std::to_string(s.max_touched_after_100) +
                  " (limit 2)"};
}

Outcome calendar_scenario() {
  std::size_t ok = 0;
  std::string failed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = scenario::calendar(seed);
    if (r.passed()) {
      ++ok;
      continue;
    }
    for (const auto& c : r.checks) {
      if (!c.passed && failed.empty()) failed = " first failed check (seed " + std::to_string(seed) + "): " + c.description;
    }
    if (failed.empty()) failed = " seed " + std::to_string(seed) + " did not converge";
  }
  return {ok == 10, std::to_string(ok) + "/10 seeds: two-head conflict seen by both, merged single head with both "
                                         "edits in history, private branches conflict-free" + failed};
}

Outcome booking_scenario() {
  std::size_t ok = 0;
  std::int64_t accepted_total = 0;
  std::string failed;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto r = scenario::booking(1, 2, seed);
    accepted_total += r.metrics.at("accepted");
    if (r.passed() && r.metrics.at("accepted") == 1) {
      ++ok;
    } else if (failed.empty()) {
      failed = " first failure: seed " + std::to_string(seed);
    }
  }
  return {ok == 50, std::to_string(ok) + "/50 seeds accepted exactly 1 of 2 with the replayed count never above 1 (" +
                        std::to_string(accepted_total) + " accepted in total)" + failed};
}

Outcome store_integrity() {
  oracle::Rng rng(0x570e);
  const auto dir = fs::temp_directory_path() / ("cdvcs-integrity-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  std::size_t roundtrip_bad = 0, undetected = 0, tampers = 0;
  {
    MemoryStore mem;
    FileStore file(dir);
    std::vector<std::pair<HashRef, Bytes>> values;
    for (int i = 0; i < 1000; ++i) {
      Bytes v(1 + rng.below(512));
      for (auto& b : v) b = static_cast<std::uint8_t>(rng.below(256));
      const auto r1 = mem.put(v);
      const auto r2 = file.put(v);
      roundtrip_bad += r1 != sha256(v) || r2 != r1;
      values.emplace_back(r1, std::move(v));
    }
    for (const auto& [ref, v] : values) roundtrip_bad += mem.get(ref) != v || file.get(ref) != v;

    auto tamper = [&](ValueStore& store, const HashRef& ref, const Bytes& v, std::size_t pos) {
      Bytes bad = v;
      bad[pos] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      store.overwrite_raw(ref, bad);
      ++tampers;
      try {
        store.get(ref);
        ++undetected;
      } catch (const Error& e) {
        undetected += e.code() != ErrorCode::IntegrityError;
      }
      store.overwrite_raw(ref, v);
    };
    for (const auto& [ref, v] : values) {
      tamper(mem, ref, v, rng.below(v.size()));
      tamper(file, ref, v, rng.below(v.size()));
    }
    // Every position of a few values.
    for (std::size_t i = 0; i < 5; ++i) {
      const auto& [ref, v] = values[i];
      for (std::size_t pos = 0; pos < v.size(); ++pos) tamper(mem, ref, v, pos);
    }
  }
  fs::remove_all(dir);
  if (!g_convergence_ran) {
    return {false, "needs criterion 1 for the atomicity instrumentation"};
  }
  return {roundtrip_bad == 0 && undetected == 0 && g_atomicity_violations == 0,
          "1000 values x 2 stores round-trip (" + std::to_string(roundtrip_bad) + " bad), " + std::to_string(tampers) +
              " single-byte tampers (" + std::to_string(undetected) + " undetected), " +
              std::to_string(g_atomicity_violations) + " ops applied with missing refs during criterion 1"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"convergence under partitions", convergence},
      {"lca oracle equivalence", lca_oracle},
      {"semilattice laws", semilattice},
      {"100k commit benchmark", benchmark},
      {"calendar scenario", calendar_scenario},
      {"booking scenario", booking_scenario},
      {"store integrity", store_integrity},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));
  if (selected.contains(7)) selected.insert(1);

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.contains(i + 1)) continue;
    const auto& [name, run] = criteria[i];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << name << "): " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
