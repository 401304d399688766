#include <doctest.h>

#include <algorithm>
#include <map>

#include "cdvcs/commit_graph.hpp"
#include "cdvcs/error.hpp"
#include "oracles.hpp"

using namespace cdvcs;

namespace {

CommitNode node(std::vector<CommitId> parents, const std::string& tag) { return CommitNode{std::move(parents), {}, {{"t", tag}}}; }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

struct Diamond {
  CommitNode r = node({}, "r");
  CommitNode a = node({r.id()}, "a");
  CommitNode b = node({r.id()}, "b");
  CommitNode m = node({a.id(), b.id()}, "m");
  CommitGraph g;
  Diamond() { g.add({{r.id(), {}}, {a.id(), a.parents}, {b.id(), b.parents}, {m.id(), m.parents}}); }
};

}  // namespace

TEST_CASE("commit node encoding") {
  const auto r = node({}, "root");
  const auto c = CommitNode{{r.id()}, {sha256("t1"), sha256("t2")}, {{"a", "1"}, {"b", "2"}}};
  CHECK(CommitNode::decode(c.encode()) == c);
  CHECK(c.id() == sha256(c.encode()));
  CHECK(c.id() != r.id());
  auto dup = c;
  dup.parents.push_back(r.id());
  CHECK(code_of([&] { CommitNode::decode(dup.encode()); }) == ErrorCode::ProtocolError);
}

TEST_CASE("graph add checks closure and keeps generations") {
  Diamond d;
  CHECK(d.g.size() == 4);
  CHECK(d.g.find(d.r.id())->generation == 1);
  CHECK(d.g.find(d.m.id())->generation == 3);
  CHECK(d.g.parents(d.m.id()) == d.m.parents);

  CommitGraph g;
  const auto orphan = node({sha256("nowhere")}, "o");
  CHECK(code_of([&] { g.add({{orphan.id(), orphan.parents}}); }) == ErrorCode::MissingDependency);
  CHECK(g.size() == 0);

  // A fragment can describe a cycle even though hashes never do.
  const auto x = sha256("x"), y = sha256("y");
  CHECK(code_of([&] { g.add({{x, {y}}, {y, {x}}}); }) == ErrorCode::MissingDependency);
  CHECK(code_of([&] { d.g.parents(x); }) == ErrorCode::UnknownCommit);
}

TEST_CASE("graph add leaves known nodes untouched") {
  Diamond d;
  CHECK(d.g.add({{d.m.id(), d.m.parents}}).empty());
  CHECK(d.g.add({{d.m.id(), {d.b.id(), d.a.id()}}}).empty());
  CHECK(d.g.parents(d.m.id()) == d.m.parents);
}

TEST_CASE("lca on hand-built graphs") {
  Diamond d;
  auto res = lca(d.g, d.a.id(), d.g, d.b.id());
  CHECK(res.ancestors == Heads{d.r.id()});
  CHECK(lca(d.g, d.m.id(), d.g, d.a.id()).ancestors == Heads{d.a.id()});
  CHECK(lca(d.g, d.m.id(), d.g, d.m.id()).ancestors == Heads{d.m.id()});

  // Criss-cross: two maximal common ancestors.
  const auto m1 = node({d.a.id(), d.b.id()}, "m1");
  const auto m2 = node({d.b.id(), d.a.id()}, "m2");
  d.g.add({{m1.id(), m1.parents}, {m2.id(), m2.parents}});
  CHECK(lca(d.g, m1.id(), d.g, m2.id()).ancestors == Heads{d.a.id(), d.b.id()});
}

TEST_CASE("lca across two graphs reports what each side visited") {
  Diamond d;
  CommitGraph other;
  const auto c = node({d.a.id()}, "c");
  other.add({{d.r.id(), {}}, {d.a.id(), d.a.parents}, {c.id(), c.parents}});
  const auto res = lca(d.g, d.b.id(), other, c.id());
  CHECK(res.ancestors == Heads{d.r.id()});
  CHECK(res.visited_b.contains(c.id()));
  CHECK(res.visited_b.contains(d.a.id()));
  CHECK(res.visited_a.contains(d.b.id()));
}

TEST_CASE("lca errors") {
  Diamond d;
  const auto r2 = node({}, "other root");
  d.g.add({{r2.id(), {}}});
  CHECK(code_of([&] { lca(d.g, d.a.id(), d.g, r2.id()); }) == ErrorCode::NoCommonAncestor);
  CHECK(code_of([&] { lca(d.g, sha256("?"), d.g, d.a.id()); }) == ErrorCode::UnknownCommit);
  CHECK(code_of([&] { remove_ancestors(d.g, {sha256("?")}); }) == ErrorCode::UnknownCommit);
}

TEST_CASE("lca and remove_ancestors match the brute-force oracle") {
  oracle::Rng rng(20240601);
  for (int round = 0; round < 150; ++round) {
    const auto n = 2 + rng.below(80);
    auto dag = oracle::random_dag(rng, n, 1 + rng.below(4));
    for (int q = 0; q < 5; ++q) {
      const auto& a = dag.nodes[rng.below(n)];
      const auto& b = dag.nodes[rng.below(n)];
      const auto res = lca(dag.graph, a, dag.graph, b);
      REQUIRE(res.ancestors == oracle::lca(dag.graph, a, b));
      CHECK(is_ancestor(dag.graph, a, b) == oracle::ancestors(dag.graph, b).contains(a));
      Heads hs;
      for (std::size_t k = 0, m = 1 + rng.below(6); k < m; ++k) hs.insert(dag.nodes[rng.below(n)]);
      REQUIRE(remove_ancestors(dag.graph, hs) == oracle::remove_ancestors(dag.graph, hs));
    }
  }
}

TEST_CASE("lca with several roots") {
  oracle::Rng rng(7);
  for (int round = 0; round < 50; ++round) {
    auto dag = oracle::random_dag(rng, 40, 3, 3);
    const auto& a = dag.nodes[rng.below(40)];
    const auto& b = dag.nodes[rng.below(40)];
    const auto expected = oracle::lca(dag.graph, a, b);
    if (expected.empty()) {
      CHECK_THROWS_AS(lca(dag.graph, a, dag.graph, b), Error);
    } else {
      CHECK(lca(dag.graph, a, dag.graph, b).ancestors == expected);
    }
  }
}

TEST_CASE("commit_history is a parents-first linearization of the ancestors") {
  oracle::Rng rng(99);
  for (int round = 0; round < 60; ++round) {
    const auto n = 1 + rng.below(60);
    auto dag = oracle::random_dag(rng, n, 3);
    const auto& c = dag.nodes[rng.below(n)];
    const auto hist = commit_history(dag.graph, c);
    const auto anc = oracle::ancestors(dag.graph, c);
    REQUIRE(hist.size() == anc.size());
    CHECK(std::set<CommitId>(hist.begin(), hist.end()) == anc);
    CHECK(hist.back() == c);
    std::map<CommitId, std::size_t> pos;
    for (std::size_t i = 0; i < hist.size(); ++i) pos[hist[i]] = i;
    for (const auto& id : hist) {
      for (const auto& p : dag.graph.parents(id)) CHECK(pos[p] < pos[id]);
    }
  }
}

TEST_CASE("commit_history follows parent order") {
  Diamond d;
  const auto h = commit_history(d.g, d.m.id());
  CHECK(h == std::vector<CommitId>{d.r.id(), d.a.id(), d.b.id(), d.m.id()});
}

TEST_CASE("graph merge is a union and reports new nodes") {
  Diamond d;
  CommitGraph small;
  small.add({{d.r.id(), {}}, {d.a.id(), d.a.parents}});
  const auto added = small.merge(d.g);
  CHECK(added.size() == 2);
  CHECK(small == d.g);
  CHECK(small.merge(d.g).empty());
}
