// cdvcs: run the replication scenarios, the commit benchmark and the
// convergence fuzzer from the command line.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "cdvcs/error.hpp"
#include "cdvcs/harness.hpp"
#include "cdvcs/scenarios.hpp"

namespace fs = std::filesystem;
using namespace cdvcs;

namespace {

int run_scenario(const std::string& name, std::uint64_t seed, std::size_t commits, std::size_t observers,
                 std::size_t capacity, std::size_t requests, const std::string& report_path) {
  scenario::ScenarioReport report;
  if (name == "calendar") {
    report = scenario::calendar(seed);
  } else if (name == "single-writer") {
    report = scenario::single_writer(commits, observers, seed);
  } else {
    report = scenario::booking(capacity, requests, seed);
  }
  report.write_text(std::cout);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw Error(ErrorCode::StorageError, "cannot write " + report_path);
    report.write_json(out);
  }
  return report.passed() ? 0 : 1;
}

int run_bench(std::size_t n, const std::string& out_path, const std::string& store_dir) {
  std::shared_ptr<ValueStore> store;
  if (store_dir.empty()) {
    store = std::make_shared<MemoryStore>();
  } else {
    store = std::make_shared<FileStore>(store_dir);
  }
  std::ofstream csv(out_path);
  if (!csv) throw Error(ErrorCode::StorageError, "cannot write " + out_path);
  const auto s = harness::bench_commit(n, csv, store);
  std::cout << "commits: " << s.commits << "\n"
            << "seconds: " << std::fixed << std::setprecision(3) << s.total_seconds << "\n"
            << "decile medians (us):";
  for (double d : s.decile_median_us) std::cout << ' ' << std::setprecision(2) << d;
  std::cout << "\nlast/first decile: " << std::setprecision(3) << s.last_to_first_decile << "\n"
            << "max touched buckets after commit 100: " << s.max_touched_after_100 << "\n"
            << "csv: " << out_path << "\n";
  return 0;
}

int run_fuzz(const harness::FuzzConfig& config, std::uint64_t first_seed, std::size_t seeds,
             const std::string& trace_dir) {
  std::size_t failed = 0;
  for (std::uint64_t seed = first_seed; seed < first_seed + seeds; ++seed) {
    const auto r = harness::fuzz_converge(config, seed);
    std::cout << "seed " << seed << ": " << (r.passed ? "ok" : "FAIL") << "  commits=" << r.commits
              << " merges=" << r.merges << " pulls=" << r.pulls << " partitions=" << r.partitions
              << " messages=" << r.messages << " ticks=" << r.ticks << '\n';
    if (r.passed) continue;
    ++failed;
    std::cout << "  " << r.failure << '\n';
    if (!trace_dir.empty()) {
      fs::create_directories(trace_dir);
      const auto path = fs::path(trace_dir) / ("seed-" + std::to_string(seed) + ".trace");
      std::ofstream(path) << r.trace;
      std::cout << "  trace: " << path.string() << '\n';
    }
  }
  std::cout << (seeds - failed) << '/' << seeds << " seeds converged\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replicated version control toolkit"};
  app.require_subcommand(1);

  auto* sc = app.add_subcommand("scenario", "Run a replication scenario");
  std::string scenario_name;
  std::uint64_t seed = 1;
  std::size_t commits = 20, observers = 2, capacity = 1, requests = 2;
  std::string report_path;
  sc->add_option("name", scenario_name, "calendar | single-writer | booking")
      ->required()
      ->check(CLI::IsMember({"calendar", "single-writer", "booking"}));
  sc->add_option("--seed", seed, "Network seed");
  sc->add_option("--commits", commits, "single-writer: number of commits");
  sc->add_option("--observers", observers, "single-writer: number of observers")->check(CLI::PositiveNumber);
  sc->add_option("--capacity", capacity, "booking: capacity");
  sc->add_option("--requests", requests, "booking: number of clients");
  sc->add_option("--report", report_path, "Write a JSON report here");

  auto* bench = app.add_subcommand("bench", "Benchmarks");
  auto* bench_commit = bench->add_subcommand("commit", "Sequential commit latency");
  bench->require_subcommand(1);
  std::size_t n = 100000;
  std::string out_path = "commit_bench.csv";
  std::string store_dir;
  bench_commit->add_option("--n", n, "Number of commits");
  bench_commit->add_option("--out", out_path, "CSV output path");
  bench_commit->add_option("--store-dir", store_dir, "Use a file store rooted here (default: in memory)");

  auto* fuzz = app.add_subcommand("fuzz", "Randomized convergence check");
  harness::FuzzConfig fc;
  std::size_t seeds = 10;
  std::uint64_t first_seed = 1;
  std::string trace_dir = "fuzz-traces";
  fuzz->add_option("--replicas", fc.replicas, "Replicas (at least 2)")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  fuzz->add_option("--ops", fc.ops, "Upstream operations per seed");
  fuzz->add_option("--seeds", seeds, "Number of seeds");
  fuzz->add_option("--first-seed", first_seed, "First seed");
  fuzz->add_option("--partition-prob", fc.partition_prob, "Partition probability per epoch")
      ->check(CLI::Range(0.0, 1.0));
  fuzz->add_option("--trace-dir", trace_dir, "Directory for traces of failing seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sc) return run_scenario(scenario_name, seed, commits, observers, capacity, requests, report_path);
    if (*bench_commit) return run_bench(n, out_path, store_dir);
    if (*fuzz) return run_fuzz(fc, first_seed, seeds, trace_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
