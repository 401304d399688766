#include <doctest.h>

#include "cdvcs/error.hpp"
#include "cdvcs/orset.hpp"
#include "oracles.hpp"

using namespace cdvcs;

TEST_CASE("add and remove") {
  auto u = or_add({}, "x", "r1");
  CHECK(u.state.contains("x"));
  CHECK(u.state.clock("r1") == 1);
  CHECK(u.delta.added.at("x") == std::set<Tag>{{"r1", 1}});
  auto v = or_remove(u.state, "x");
  CHECK_FALSE(v.state.contains("x"));
  CHECK(v.state.tombstones().at("x").size() == 1);
  CHECK(v.state.clock("r1") == 1);
  try {
    or_remove(v.state, "x");
    FAIL("expected NotPresent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPresent);
  }
}

TEST_CASE("concurrent add wins over remove") {
  auto base = or_add({}, "x", "r1").state;
  const auto removal = or_remove(base, "x").delta;
  const auto readd = or_add(base, "x", "r2").delta;
  auto a = or_apply_downstream(or_apply_downstream(base, removal), readd);
  auto b = or_apply_downstream(or_apply_downstream(base, readd), removal);
  CHECK(a == b);
  CHECK(a.contains("x"));
  CHECK(a.elements() == std::set<Element>{"x"});
}

TEST_CASE("remove before add of the same tag still removes it") {
  auto u = or_add({}, "x", "r1");
  auto rm = or_remove(u.state, "x").delta;
  auto s = or_apply_downstream(OrSetState{}, rm);
  s = or_apply_downstream(s, u.delta);
  CHECK_FALSE(s.contains("x"));
}

TEST_CASE("semilattice laws") {
  oracle::Rng rng(3);
  const auto fam = oracle::orset_family(rng, 40);
  for (int i = 0; i < 200; ++i) {
    const auto& a = fam[rng.below(fam.size())];
    const auto& b = fam[rng.below(fam.size())];
    const auto& c = fam[rng.below(fam.size())];
    CHECK(or_state_merge(a, a).encode() == a.encode());
    CHECK(or_state_merge(a, b).encode() == or_state_merge(b, a).encode());
    CHECK(or_state_merge(or_state_merge(a, b), c).encode() == or_state_merge(a, or_state_merge(b, c)).encode());
  }
}

TEST_CASE("as_delta carries a whole state") {
  oracle::Rng rng(4);
  const auto fam = oracle::orset_family(rng, 20);
  for (const auto& a : fam) {
    for (const auto& b : fam) CHECK(or_apply_downstream(a, as_delta(b)) == or_state_merge(a, b));
  }
}

TEST_CASE("encodings round trip and reject contradictions") {
  oracle::Rng rng(6);
  for (const auto& s : oracle::orset_family(rng, 20)) {
    CHECK(OrSetState::decode(s.encode()) == s);
    const auto d = as_delta(s);
    CHECK(OrSetDelta::decode(d.encode()) == d);
  }
  auto s = or_add({}, "x", "r1").state;
  CHECK(or_apply_downstream(OrSetState{}, OrSetDelta{{}, {{"x", {{"r1", 1}}}}}).tombstones().size() == 1);
  auto bytes = s.encode();
  bytes.push_back(1);
  CHECK_THROWS_AS(OrSetState::decode(bytes), Error);
}
