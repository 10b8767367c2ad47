#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "hermes/bytes.hpp"
#include "hermes/error.hpp"

namespace hermes::engine {

// Per-record bookkeeping beyond the fingerprint itself.
inline constexpr std::size_t kRecordOverheadBytes = 8;

// Records that fit in `memory_mb` MiB when each costs h_B + 8 bytes.
inline std::uint64_t store_capacity(std::uint64_t memory_mb, std::size_t fingerprint_bytes) {
  if (memory_mb == 0) throw ArgumentError("store memory budget must be positive");
  return (memory_mb << 20) / (fingerprint_bytes + kRecordOverheadBytes);
}

enum class InsertResult { inserted, duplicate, conflict };

enum class ClaimResult {
  bound,    // already holds a payload
  claimed,  // caller now owns the right to supply the payload
  pending,  // another request is already fetching it
};

// Fingerprint -> payload map shared by all sessions of a node. Bindings are
// insert-if-absent: the first payload for a fingerprint wins for good.
//
// Claims mark fingerprints whose payload has been requested but not yet
// received, so that concurrent sessions wait instead of asking again.
class FingerprintStore {
 public:
  using Owner = std::uint64_t;

  explicit FingerprintStore(std::size_t key_bytes) : key_bytes_(key_bytes) {}

  std::size_t key_bytes() const noexcept { return key_bytes_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
  }

  bool contains(ByteView key) const {
    std::shared_lock lock(mutex_);
    return records_.count(key_of(key)) != 0;
  }

  std::optional<Bytes> find(ByteView key) const {
    std::shared_lock lock(mutex_);
    const auto it = records_.find(key_of(key));
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  InsertResult insert_if_absent(ByteView key, ByteView payload) {
    check_key(key);
    std::unique_lock lock(mutex_);
    auto k = key_of(key);
    claims_.erase(k);
    const auto [it, inserted] = records_.try_emplace(std::move(k), payload.begin(), payload.end());
    ++generation_;
    if (inserted) return InsertResult::inserted;
    return std::equal(it->second.begin(), it->second.end(), payload.begin(), payload.end())
               ? InsertResult::duplicate
               : InsertResult::conflict;
  }

  ClaimResult claim(ByteView key, Owner owner) {
    check_key(key);
    std::unique_lock lock(mutex_);
    auto k = key_of(key);
    if (records_.count(k) != 0) return ClaimResult::bound;
    const auto [it, inserted] = claims_.try_emplace(std::move(k), owner);
    return inserted ? ClaimResult::claimed : ClaimResult::pending;
  }

  void release(ByteView key, Owner owner) {
    std::unique_lock lock(mutex_);
    const auto it = claims_.find(key_of(key));
    if (it != claims_.end() && it->second == owner) {
      claims_.erase(it);
      ++generation_;
    }
  }

  void release_all(Owner owner) {
    std::unique_lock lock(mutex_);
    for (auto it = claims_.begin(); it != claims_.end();) {
      it = it->second == owner ? claims_.erase(it) : std::next(it);
    }
    ++generation_;
  }

  // Bumped on every bind or release; lets waiters notice progress cheaply.
  std::uint64_t generation() const {
    std::shared_lock lock(mutex_);
    return generation_;
  }

  std::uint64_t payload_bytes() const {
    std::shared_lock lock(mutex_);
    std::uint64_t total = 0;
    for (const auto& [k, v] : records_) total += v.size();
    return total;
  }

  // Snapshot layout: "HRMS", version, key length, u64 record count, then
  // (key, u32 payload length, payload) records. Integers are big-endian.
  void save(const std::string& path) const {
    Bytes out = to_bytes("HRMS");
    out.push_back(kSnapshotVersion);
    out.push_back(static_cast<std::uint8_t>(key_bytes_));
    {
      std::shared_lock lock(mutex_);
      put_be(out, static_cast<std::uint64_t>(records_.size()));
      for (const auto& [k, v] : records_) {
        out.insert(out.end(), k.begin(), k.end());
        put_be(out, static_cast<std::uint32_t>(v.size()));
        append(out, v);
      }
    }
    const std::string tmp = path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot write store snapshot " + path);
      f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
      if (!f.flush()) throw Error("short write on store snapshot " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot replace store snapshot " + path);
  }

  // Loads records without rebinding anything already present.
  std::size_t load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read store snapshot " + path);
    const Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    ByteView in(data);
    if (in.size() < 14 || key_of(in.first(4)) != "HRMS") throw CorruptInput("not a store snapshot: " + path);
    if (in[4] != kSnapshotVersion) throw CorruptInput("unsupported snapshot version");
    if (in[5] != key_bytes_) throw ConfigError("snapshot fingerprint length does not match the store");
    const std::uint64_t count = get_be(in.subspan(6), 8);
    std::size_t off = 14;
    std::size_t loaded = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
      if (in.size() < off + key_bytes_ + 4) throw CorruptInput("truncated store snapshot");
      const auto key = in.subspan(off, key_bytes_);
      const auto len = static_cast<std::size_t>(get_be(in.subspan(off + key_bytes_), 4));
      off += key_bytes_ + 4;
      if (in.size() < off + len) throw CorruptInput("truncated store snapshot");
      if (insert_if_absent(key, in.subspan(off, len)) == InsertResult::inserted) ++loaded;
      off += len;
    }
    return loaded;
  }

 private:
  static constexpr std::uint8_t kSnapshotVersion = 1;

  void check_key(ByteView key) const {
    if (key.size() != key_bytes_) throw ArgumentError("fingerprint length does not match the store");
  }

  std::size_t key_bytes_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, Bytes> records_;
  std::unordered_map<std::string, Owner> claims_;
  std::uint64_t generation_ = 0;
};

}  // namespace hermes::engine
