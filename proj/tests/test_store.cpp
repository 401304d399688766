#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cdvcs/cdvcs.hpp"
#include "cdvcs/error.hpp"
#include "cdvcs/store.hpp"
#include "oracles.hpp"

using namespace cdvcs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cdvcs-store-" + std::to_string(std::random_device{}()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Bytes random_value(oracle::Rng& rng) {
  Bytes v(rng.below(200));
  for (auto& b : v) b = static_cast<std::uint8_t>(rng.below(256));
  return v;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

void exercise_values(ValueStore& store) {
  oracle::Rng rng(17);
  std::vector<std::pair<HashRef, Bytes>> kept;
  for (int i = 0; i < 200; ++i) {
    auto v = random_value(rng);
    const auto ref = store.put(v);
    CHECK(ref == sha256(v));
    CHECK(store.put(v) == ref);
    kept.emplace_back(ref, std::move(v));
  }
  for (const auto& [ref, v] : kept) {
    CHECK(store.has(ref));
    CHECK(store.get(ref) == v);
  }
  CHECK_FALSE(store.has(sha256("never stored")));
  CHECK(code_of([&] { store.get(sha256("never stored")); }) == ErrorCode::NotFound);
}

}  // namespace

TEST_CASE("bucket key uses the first 12 bits") {
  Digest d;
  d.bytes[0] = 0xab;
  d.bytes[1] = 0xcd;
  CHECK(bucket_key(d) == 0xabc);
}

TEST_CASE("memory store values") {
  MemoryStore s;
  exercise_values(s);
}

TEST_CASE("file store values and layout") {
  TempDir dir;
  FileStore s(dir.path);
  exercise_values(s);
  const auto ref = s.put(std::string_view("layout"));
  const auto hex = ref.hex();
  CHECK(s.value_path(ref) == dir.path / "values" / hex.substr(0, 2) / hex);
  CHECK(fs::exists(s.value_path(ref)));
  CHECK(s.bucket_path(0xabc) == dir.path / "meta" / "abc.bucket");
}

TEST_CASE("tampering is detected on read") {
  MemoryStore mem;
  const auto ref = mem.put(std::string_view("payload"));
  auto bytes = mem.get(ref);
  bytes[0] ^= 1;
  mem.overwrite_raw(ref, bytes);
  CHECK(code_of([&] { mem.get(ref); }) == ErrorCode::IntegrityError);

  TempDir dir;
  FileStore file(dir.path);
  const auto fref = file.put(std::string_view("on disk"));
  {
    std::fstream f(file.value_path(fref), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(2);
    f.put('#');
  }
  CHECK(code_of([&] { file.get(fref); }) == ErrorCode::IntegrityError);
}

TEST_CASE("file store survives reopening") {
  TempDir dir;
  HashRef ref;
  GraphFragment graph;
  {
    FileStore s(dir.path);
    ref = s.put(std::string_view("persisted"));
    oracle::Rng rng(1);
    auto dag = oracle::random_dag(rng, 50, 2);
    graph = dag.graph.as_fragment();
    s.persist_graph_delta(graph);
  }
  FileStore again(dir.path);
  CHECK(again.get(ref) == Bytes{'p', 'e', 'r', 's', 'i', 's', 't', 'e', 'd'});
  CHECK(again.value_count() == 1);
  CHECK(again.load_graph() == graph);
}

TEST_CASE("graph deltas touch only their buckets") {
  MemoryStore s;
  oracle::Rng rng(2);
  auto dag = oracle::random_dag(rng, 300, 3);
  std::set<BucketKey> all;
  GraphFragment so_far;
  for (const auto& id : dag.nodes) {
    GraphFragment one{{id, dag.graph.parents(id)}};
    const auto touched = s.persist_graph_delta(one);
    CHECK(touched == std::set<BucketKey>{bucket_key(id)});
    so_far.insert(one.begin(), one.end());
  }
  CHECK(s.load_graph() == so_far);
  const auto writes = s.bucket_writes();
  CHECK(s.persist_graph_delta({{dag.nodes[5], dag.graph.parents(dag.nodes[5])}}).empty());
  CHECK(s.bucket_writes() == writes);
  const auto b = s.load_bucket(bucket_key(dag.nodes[0]));
  CHECK(MetadataBucket::decode(b.encode()).entries == b.entries);
  CHECK(std::is_sorted(b.entries.begin(), b.entries.end()));
}

TEST_CASE("missing_refs lists absent nodes and transactions") {
  MemoryStore s;
  const CommitNode root{{}, {}, {{"n", "r"}}};
  const auto txn = Bytes{'t'};
  const CommitNode c{{root.id()}, {sha256(txn)}, {}};
  DownstreamOp op{"main", {{root.id(), {}}, {c.id(), c.parents}}, {c.id()}};
  CHECK(missing_refs(s, op) == std::set<HashRef>{root.id(), c.id()});
  s.put(root.encode());
  s.put(c.encode());
  CHECK(missing_refs(s, op) == std::set<HashRef>{sha256(txn)});
  s.put(txn);
  CHECK(missing_refs(s, op).empty());
}
