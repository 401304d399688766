#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "cdvcs/scenarios.hpp"

using namespace cdvcs::scenario;

TEST_CASE("calendar conflict and resolution") {
  for (std::uint64_t seed : {1, 2, 3, 17}) {
    const auto r = calendar(seed);
    CAPTURE(seed);
    for (const auto& c : r.checks) {
      CAPTURE(c.description);
      CHECK(c.passed);
    }
    CHECK(r.converged);
    CHECK(r.conflicts_observed == 1);
    CHECK(r.histories.at("alice").size() == 4);
  }
}

TEST_CASE("single writer never conflicts") {
  const auto r = single_writer(25, 3, 8);
  CHECK(r.passed());
  CHECK(r.conflicts_observed == 0);
  CHECK(r.histories.size() == 4);
  for (const auto& [peer, hist] : r.histories) CHECK(hist.size() == 26);
}

TEST_CASE("single writer edge sizes") {
  const auto one = single_writer(1, 1, 1);
  CHECK(one.passed());
  REQUIRE(one.histories.size() == 2);
  for (const auto& [peer, hist] : one.histories) CHECK(hist.size() == 2);

  const auto big = single_writer(100, 3, 2);
  CHECK(big.passed());
  CHECK(big.conflicts_observed == 0);
  REQUIRE(big.histories.size() == 4);
  const auto& ref = big.histories.begin()->second;
  CHECK(ref.size() == 101);
  for (const auto& [peer, hist] : big.histories) CHECK(hist == ref);
}

TEST_CASE("booking admits exactly capacity") {
  struct Case {
    std::size_t capacity, requests;
  };
  for (const auto c : {Case{1, 2}, Case{1, 4}, Case{2, 3}, Case{0, 2}, Case{3, 2}}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = booking(c.capacity, c.requests, seed);
      CAPTURE(c.capacity);
      CAPTURE(c.requests);
      CAPTURE(seed);
      for (const auto& chk : r.checks) {
        CAPTURE(chk.description);
        CHECK(chk.passed);
      }
      CHECK(r.converged);
      CHECK(r.metrics.at("accepted") == static_cast<std::int64_t>(std::min(c.capacity, c.requests)));
    }
  }
}

TEST_CASE("reports render as text and json") {
  const auto r = calendar(1);
  std::ostringstream text, json;
  r.write_text(text);
  r.write_json(json);
  CHECK(text.str().find("PASSED") != std::string::npos);
  const auto j = nlohmann::json::parse(json.str());
  CHECK(j.at("name") == "calendar");
  CHECK(j.at("passed") == true);
  CHECK(j.at("checks").size() == r.checks.size());
  CHECK(j.at("histories").at("bob").size() == 4);
}
