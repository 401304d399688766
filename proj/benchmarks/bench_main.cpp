#include <benchmark/benchmark.h>

#include "cdvcs/cdvcs.hpp"
#include "cdvcs/orset.hpp"
#include "cdvcs/peer.hpp"

using namespace cdvcs;

namespace {

CommitNode node_on(const CommitId& parent, std::uint64_t i) {
  return CommitNode{{parent}, {}, {{"i", std::to_string(i)}}};
}

CdvcsState chain(std::size_t len, CommitId& tip) {
  const CommitNode root{{}, {}, {{"name", "chain"}}};
  auto state = new_cdvcs(root, "main");
  tip = root.id();
  for (std::size_t i = 0; i < len; ++i) {
    auto node = node_on(tip, i);
    state = commit(std::move(state), "main", node).state;
    tip = node.id();
  }
  return state;
}

void BM_PeerCommit(benchmark::State& st) {
  Peer peer("bench");
  peer.create_cdvcs("repo", CommitNode{{}, {}, {{"name", "bench"}}}, "main");
  std::uint64_t i = 0;
  for (auto _ : st) {
    peer.local_upstream("repo", upstream::Commit{"main", {}, {{"i", std::to_string(i++)}}});
  }
}
BENCHMARK(BM_PeerCommit);

void BM_LcaDivergedChains(benchmark::State& st) {
  const auto len = static_cast<std::size_t>(st.range(0));
  CommitId base;
  auto state = chain(len, base);
  CommitId a = base, b = base;
  CommitGraph g = state.graph();
  GraphFragment f;
  for (std::size_t i = 0; i < len; ++i) {
    auto na = CommitNode{{a}, {}, {{"a", std::to_string(i)}}};
    auto nb = CommitNode{{b}, {}, {{"b", std::to_string(i)}}};
    f[na.id()] = na.parents;
    f[nb.id()] = nb.parents;
    a = na.id();
    b = nb.id();
  }
  g.add(f);
  for (auto _ : st) benchmark::DoNotOptimize(lca(g, a, g, b));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_LcaDivergedChains)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void BM_StateMerge(benchmark::State& st) {
  CommitId tip;
  const auto base = chain(static_cast<std::size_t>(st.range(0)), tip);
  auto other = commit(base, "main", node_on(tip, 0xffff)).state;
  for (auto _ : st) benchmark::DoNotOptimize(state_merge(base, other));
}
BENCHMARK(BM_StateMerge)->Range(64, 4096);

void BM_OrSetAdd(benchmark::State& st) {
  OrSetState s;
  std::uint64_t i = 0;
  for (auto _ : st) s = or_add(std::move(s), "e" + std::to_string(i++ % 1024), "r").state;
}
BENCHMARK(BM_OrSetAdd);

}  // namespace

BENCHMARK_MAIN();
