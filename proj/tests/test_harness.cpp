#include <doctest.h>

#include <sstream>

#include "cdvcs/error.hpp"
#include "cdvcs/harness.hpp"

using namespace cdvcs;
using namespace cdvcs::harness;

TEST_CASE("commit benchmark writes one row per commit") {
  std::ostringstream csv;
  const auto s = bench_commit(300, csv, std::make_shared<MemoryStore>());
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kBenchCsvHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (rows == 300) CHECK(line.rfind("300,", 0) == 0);
    CHECK(line.substr(line.rfind(',') + 1) == std::to_string(rows + 1));
  }
  CHECK(rows == 300);
  CHECK(s.commits == 300);
  CHECK(s.decile_median_us.size() == 10);
  CHECK(s.max_touched_after_100 == 1);
}

TEST_CASE("decile medians") {
  std::vector<BenchRecord> recs;
  for (std::uint64_t i = 0; i < 100; ++i) recs.push_back({i + 1, static_cast<double>(i), 1, 1});
  const auto d = decile_medians(recs);
  REQUIRE(d.size() == 10);
  CHECK(d.front() == doctest::Approx(4.5));
  CHECK(d.back() == doctest::Approx(94.5));
  CHECK(decile_medians({}).empty());
}

TEST_CASE("fuzz runs converge") {
  FuzzConfig cfg;
  cfg.replicas = 4;
  cfg.ops = 300;
  cfg.partition_prob = 0.5;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto r = fuzz_converge(cfg, seed);
    CAPTURE(r.failure);
    CHECK(r.passed);
    CHECK(r.commits > 0);
    CHECK(r.atomicity_violations == 0);
  }
}

TEST_CASE("fuzz is deterministic per seed") {
  FuzzConfig cfg;
  cfg.replicas = 3;
  cfg.ops = 150;
  const auto a = fuzz_converge(cfg, 77);
  const auto b = fuzz_converge(cfg, 77);
  CHECK(a.messages == b.messages);
  CHECK(a.ticks == b.ticks);
  CHECK(a.merges == b.merges);
}

TEST_CASE("injected faults are reported") {
  FuzzConfig cfg;
  cfg.replicas = 3;
  cfg.ops = 120;
  cfg.fault = Fault::Divergence;
  const auto div = fuzz_converge(cfg, 5);
  CHECK_FALSE(div.passed);
  CHECK(div.failure.find("differs") != std::string::npos);
  CHECK_FALSE(div.trace.empty());

  cfg.fault = Fault::InvariantViolation;
  const auto inv = fuzz_converge(cfg, 5);
  CHECK_FALSE(inv.passed);
  CHECK(inv.failure.find("ancestor") != std::string::npos);
}

TEST_CASE("replica count bounds") {
  FuzzConfig cfg;
  cfg.ops = 100;
  cfg.replicas = 1;
  CHECK_THROWS_AS(fuzz_converge(cfg, 1), cdvcs::Error);
  cfg.replicas = 2;
  CHECK(fuzz_converge(cfg, 1).passed);
  cfg.ops = 0;
  const auto idle = fuzz_converge(cfg, 1);
  CHECK(idle.passed);
  CHECK(idle.commits == 0);
}
