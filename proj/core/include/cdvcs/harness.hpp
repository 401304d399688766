#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cdvcs/cdvcs.hpp"
#include "cdvcs/store.hpp"

namespace cdvcs::harness {

struct BenchRecord {
  std::uint64_t commit_index = 0;
  double latency_us = 0;
  std::size_t touched_buckets = 0;
  std::size_t graph_size = 0;
};

struct BenchSummary {
  std::size_t commits = 0;
  double total_seconds = 0;
  std::vector<double> decile_median_us;  // ten entries when commits >= 10
  std::size_t max_touched_after_100 = 0;
  double last_to_first_decile = 0;
};

inline constexpr const char* kBenchCsvHeader = "commit_index,latency_us,touched_buckets,graph_size";

/// `n` sequential commits into one branch through a full local peer backed by
/// `store`. One CSV row per commit is written to `csv`, after the header.
BenchSummary bench_commit(std::size_t n, std::ostream& csv, std::shared_ptr<ValueStore> store);

/// Median of each tenth of the records' latencies, in commit order.
std::vector<double> decile_medians(const std::vector<BenchRecord>& records);

enum class Fault {
  None,
  /// One replica commits after quiescence without telling anyone.
  Divergence,
  /// The verifier is handed a state whose heads are not an antichain.
  InvariantViolation,
};

struct FuzzConfig {
  std::size_t replicas = 5;
  std::size_t ops = 1000;
  double partition_prob = 0.2;
  std::uint64_t latency_max = 4;
  std::uint64_t partition_epoch = 50;
  std::uint64_t quiescence_budget = 1'000'000;
  Fault fault = Fault::None;
};

struct FuzzResult {
  std::uint64_t seed = 0;
  bool passed = false;
  std::string failure;
  std::size_t commits = 0;
  std::size_t merges = 0;
  std::size_t pulls = 0;
  std::size_t partitions = 0;
  std::uint64_t messages = 0;
  std::uint64_t ticks = 0;
  std::uint64_t atomicity_violations = 0;
  std::string trace;  // filled on failure
};

/// One seeded run: random commits / merges / pulls across replicas under
/// random partitions, final heal, run to quiescence, then byte-equality of
/// every CRDT across replicas plus structural invariants and store closure.
FuzzResult fuzz_converge(const FuzzConfig& config, std::uint64_t seed);

/// Problems found comparing replicas of one CRDT (empty when converged).
std::vector<std::string> verify_replicas(const std::vector<const CdvcsState*>& replicas);

}  // namespace cdvcs::harness
