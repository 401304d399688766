#include "cdvcs/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "cdvcs/encoding.hpp"
#include "cdvcs/error.hpp"

namespace cdvcs {

namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kBucketTag = 0x42;  // 'B'
constexpr std::uint8_t kVersion = 1;
constexpr char kHex[] = "0123456789abcdef";

std::string bucket_name(BucketKey key) {
  return {kHex[(key >> 8) & 0xf], kHex[(key >> 4) & 0xf], kHex[key & 0xf]};
}

std::optional<Bytes> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::StorageError, "read failed: " + path.string());
  return data;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::StorageError, "mkdir " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::StorageError, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::StorageError, "rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

BucketKey bucket_key(const CommitId& id) {
  return static_cast<BucketKey>((id.bytes[0] << 4) | (id.bytes[1] >> 4));
}

Bytes MetadataBucket::encode() const {
  Writer w;
  w.u8(kBucketTag);
  w.u8(kVersion);
  w.u32(key);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [id, parents] : entries) {
    w.digest(id);
    w.u32(static_cast<std::uint32_t>(parents.size()));
    for (const auto& p : parents) w.digest(p);
  }
  return std::move(w).take();
}

MetadataBucket MetadataBucket::decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.u8() != kBucketTag || r.u8() != kVersion) throw Error(ErrorCode::StorageError, "not a metadata bucket");
  MetadataBucket b;
  b.key = static_cast<BucketKey>(r.u32());
  for (auto n = r.count(Digest::kSize + 4); n > 0; --n) {
    auto id = r.digest();
    std::vector<CommitId> parents;
    for (auto k = r.count(Digest::kSize); k > 0; --k) parents.push_back(r.digest());
    b.entries.emplace_back(id, std::move(parents));
  }
  r.expect_done();
  return b;
}

HashRef ValueStore::put(std::span<const std::uint8_t> value) {
  const auto ref = sha256(value);
  if (!contains_value(ref)) write_value(ref, value);
  return ref;
}

HashRef ValueStore::put(std::string_view value) {
  return put(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(value.data()), value.size()));
}

Bytes ValueStore::get(const HashRef& ref) const {
  auto bytes = read_value(ref);
  if (!bytes) throw Error(ErrorCode::NotFound, ref.hex());
  if (sha256(*bytes) != ref) throw Error(ErrorCode::IntegrityError, "stored value does not match " + ref.hex());
  return std::move(*bytes);
}

MetadataBucket ValueStore::cached_bucket(BucketKey key) const {
  if (auto it = bucket_cache_.find(key); it != bucket_cache_.end()) return it->second;
  MetadataBucket b;
  b.key = key;
  if (auto raw = read_bucket(key)) b = MetadataBucket::decode(*raw);
  bucket_cache_.emplace(key, b);
  return b;
}

std::set<BucketKey> ValueStore::persist_graph_delta(const GraphFragment& delta) {
  std::map<BucketKey, std::vector<const GraphFragment::value_type*>> grouped;
  for (const auto& entry : delta) grouped[bucket_key(entry.first)].push_back(&entry);

  std::lock_guard lock(bucket_mutex_);
  std::set<BucketKey> touched;
  for (const auto& [key, items] : grouped) {
    auto bucket = cached_bucket(key);
    bool changed = false;
    for (const auto* item : items) {
      auto pos = std::lower_bound(bucket.entries.begin(), bucket.entries.end(), item->first,
                                  [](const auto& e, const CommitId& id) { return e.first < id; });
      if (pos != bucket.entries.end() && pos->first == item->first) continue;
      bucket.entries.emplace(pos, item->first, item->second);
      changed = true;
    }
    if (!changed) continue;
    write_bucket(key, bucket.encode());
    ++bucket_writes_;
    bucket_cache_[key] = std::move(bucket);
    touched.insert(key);
  }
  return touched;
}

MetadataBucket ValueStore::load_bucket(BucketKey key) const {
  std::lock_guard lock(bucket_mutex_);
  return cached_bucket(key);
}

GraphFragment ValueStore::load_graph() const {
  GraphFragment out;
  for (auto key : bucket_keys()) {
    for (auto& [id, parents] : load_bucket(key).entries) out.emplace(id, parents);
  }
  return out;
}

std::size_t MemoryStore::value_count() const {
  std::lock_guard lock(mutex_);
  return values_.size();
}

void MemoryStore::overwrite_raw(const HashRef& ref, Bytes bytes) {
  std::lock_guard lock(mutex_);
  values_[ref] = std::move(bytes);
}

bool MemoryStore::contains_value(const HashRef& ref) const {
  std::lock_guard lock(mutex_);
  return values_.contains(ref);
}

std::optional<Bytes> MemoryStore::read_value(const HashRef& ref) const {
  std::lock_guard lock(mutex_);
  auto it = values_.find(ref);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void MemoryStore::write_value(const HashRef& ref, std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  values_.try_emplace(ref, bytes.begin(), bytes.end());
}

std::optional<Bytes> MemoryStore::read_bucket(BucketKey key) const {
  std::lock_guard lock(mutex_);
  auto it = buckets_.find(key);
  if (it == buckets_.end()) return std::nullopt;
  return it->second;
}

void MemoryStore::write_bucket(BucketKey key, const Bytes& bytes) {
  std::lock_guard lock(mutex_);
  buckets_[key] = bytes;
}

std::vector<BucketKey> MemoryStore::bucket_keys() const {
  std::lock_guard lock(mutex_);
  std::vector<BucketKey> keys;
  for (const auto& [k, v] : buckets_) keys.push_back(k);
  return keys;
}

FileStore::FileStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "values", ec);
  if (!ec) fs::create_directories(root_ / "meta", ec);
  if (ec) throw Error(ErrorCode::StorageError, "cannot create store at " + root_.string() + ": " + ec.message());
  for (const auto& entry : fs::recursive_directory_iterator(root_ / "values")) {
    if (entry.is_regular_file() && entry.path().extension() != ".tmp") ++value_count_;
  }
}

fs::path FileStore::value_path(const HashRef& ref) const {
  const auto hex = ref.hex();
  return root_ / "values" / hex.substr(0, 2) / hex;
}

fs::path FileStore::bucket_path(BucketKey key) const { return root_ / "meta" / (bucket_name(key) + ".bucket"); }

std::size_t FileStore::value_count() const { return value_count_; }

void FileStore::overwrite_raw(const HashRef& ref, Bytes bytes) {
  if (!contains_value(ref)) ++value_count_;
  write_file_atomic(value_path(ref), bytes);
}

bool FileStore::contains_value(const HashRef& ref) const {
  std::error_code ec;
  return fs::exists(value_path(ref), ec);
}

std::optional<Bytes> FileStore::read_value(const HashRef& ref) const { return read_file(value_path(ref)); }

void FileStore::write_value(const HashRef& ref, std::span<const std::uint8_t> bytes) {
  write_file_atomic(value_path(ref), bytes);
  ++value_count_;
}

std::optional<Bytes> FileStore::read_bucket(BucketKey key) const { return read_file(bucket_path(key)); }

void FileStore::write_bucket(BucketKey key, const Bytes& bytes) { write_file_atomic(bucket_path(key), bytes); }

std::vector<BucketKey> FileStore::bucket_keys() const {
  std::vector<BucketKey> keys;
  for (const auto& entry : fs::directory_iterator(root_ / "meta")) {
    if (entry.path().extension() != ".bucket") continue;
    keys.push_back(static_cast<BucketKey>(std::stoul(entry.path().stem().string(), nullptr, 16)));
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::set<HashRef> missing_refs(const ValueStore& store, const DownstreamOp& op) {
  std::set<CommitId> commits;
  for (const auto& [id, parents] : op.added_graph) commits.insert(id);
  commits.insert(op.added_heads.begin(), op.added_heads.end());

  std::set<HashRef> missing;
  for (const auto& id : commits) {
    if (!store.has(id)) {
      missing.insert(id);
      continue;
    }
    const auto node = CommitNode::decode(store.get(id));
    for (const auto& ref : node.txn_refs) {
      if (!store.has(ref)) missing.insert(ref);
    }
  }
  return missing;
}

}  // namespace cdvcs
