#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdvcs/cdvcs.hpp"
#include "cdvcs/digest.hpp"

namespace cdvcs {

using BucketKey = std::uint16_t;

/// Commits are partitioned by the first 12 bits of their id.
constexpr unsigned kBucketBits = 12;
BucketKey bucket_key(const CommitId& id);

/// The persisted slice of the commit graph whose ids share one prefix.
struct MetadataBucket {
  BucketKey key = 0;
  std::vector<std::pair<CommitId, std::vector<CommitId>>> entries;  // sorted by id

  Bytes encode() const;
  static MetadataBucket decode(std::span<const std::uint8_t> bytes);
};

/// Content-addressed immutable values plus bucketed commit-graph metadata.
/// Values are keyed by SHA-256 of their bytes and verified on every read.
class ValueStore {
public:
  virtual ~ValueStore() = default;

  /// Idempotent; Error(StorageError) if the backend cannot write.
  HashRef put(std::span<const std::uint8_t> value);
  HashRef put(std::string_view value);
  /// Error(NotFound) for unknown refs, Error(IntegrityError) when the stored
  /// bytes no longer hash to `ref`.
  Bytes get(const HashRef& ref) const;
  bool has(const HashRef& ref) const { return contains_value(ref); }
  virtual std::size_t value_count() const = 0;

  /// Rewrites exactly the buckets that hold a node of `delta`. Returns their keys.
  std::set<BucketKey> persist_graph_delta(const GraphFragment& delta);
  MetadataBucket load_bucket(BucketKey key) const;
  /// Every persisted graph entry across all buckets.
  GraphFragment load_graph() const;
  std::uint64_t bucket_writes() const { return bucket_writes_; }

  /// Replaces the stored bytes of `ref` without re-hashing. Fault injection.
  virtual void overwrite_raw(const HashRef& ref, Bytes bytes) = 0;

protected:
  virtual bool contains_value(const HashRef& ref) const = 0;
  virtual std::optional<Bytes> read_value(const HashRef& ref) const = 0;
  virtual void write_value(const HashRef& ref, std::span<const std::uint8_t> bytes) = 0;
  virtual std::optional<Bytes> read_bucket(BucketKey key) const = 0;
  virtual void write_bucket(BucketKey key, const Bytes& bytes) = 0;
  virtual std::vector<BucketKey> bucket_keys() const = 0;

private:
  MetadataBucket cached_bucket(BucketKey key) const;

  mutable std::mutex bucket_mutex_;
  mutable std::map<BucketKey, MetadataBucket> bucket_cache_;
  std::uint64_t bucket_writes_ = 0;
};

class MemoryStore final : public ValueStore {
public:
  std::size_t value_count() const override;
  void overwrite_raw(const HashRef& ref, Bytes bytes) override;

protected:
  bool contains_value(const HashRef& ref) const override;
  std::optional<Bytes> read_value(const HashRef& ref) const override;
  void write_value(const HashRef& ref, std::span<const std::uint8_t> bytes) override;
  std::optional<Bytes> read_bucket(BucketKey key) const override;
  void write_bucket(BucketKey key, const Bytes& bytes) override;
  std::vector<BucketKey> bucket_keys() const override;

private:
  mutable std::mutex mutex_;
  std::map<HashRef, Bytes> values_;
  std::map<BucketKey, Bytes> buckets_;
};

/// On-disk layout under `root`:
///   values/<first hex byte>/<full hex digest>
///   meta/<3 hex digits>.bucket
/// Files are written to a temporary name and renamed into place.
class FileStore final : public ValueStore {
public:
  explicit FileStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path value_path(const HashRef& ref) const;
  std::filesystem::path bucket_path(BucketKey key) const;

  std::size_t value_count() const override;
  void overwrite_raw(const HashRef& ref, Bytes bytes) override;

protected:
  bool contains_value(const HashRef& ref) const override;
  std::optional<Bytes> read_value(const HashRef& ref) const override;
  void write_value(const HashRef& ref, std::span<const std::uint8_t> bytes) override;
  std::optional<Bytes> read_bucket(BucketKey key) const override;
  void write_bucket(BucketKey key, const Bytes& bytes) override;
  std::vector<BucketKey> bucket_keys() const override;

private:
  std::filesystem::path root_;
  std::atomic<std::size_t> value_count_ = 0;
};

/// Every commit node named by `op` (graph keys and heads) and every
/// transaction ref of those nodes that `store` does not hold. Transaction refs
/// of a node are only known once the node itself is present.
std::set<HashRef> missing_refs(const ValueStore& store, const DownstreamOp& op);

}  // namespace cdvcs
