#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "adls/model.hpp"

namespace adls {

template <typename T>
struct WeightSnapshot {
  std::uint64_t version = 0;  // 0 = never published
  std::string fingerprint;
  std::vector<T> values;      // Model::copy_values order
  std::uint64_t checksum = 0;
};

// FNV-1a style hash over the raw bytes, taken eight bytes at a time in four
// interleaved lanes so a multi-megabyte snapshot checks in well under a
// millisecond. Trailing bytes are folded in one by one.
template <typename T>
std::uint64_t checksum_values(std::span<const T> values) {
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t lane[4] = {0xcbf29ce484222325ULL, 0x84222325cbf29ce4ULL, 0x9ce484222325cbf2ULL,
                           0x2325cbf29ce48422ULL};
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  const std::size_t size = values.size_bytes();
  std::size_t i = 0;
  for (; i + 32 <= size; i += 32) {
    for (int k = 0; k < 4; ++k) {
      std::uint64_t w;
      std::memcpy(&w, bytes + i + 8 * k, 8);
      lane[k] = (lane[k] ^ w) * kPrime;
    }
  }
  std::uint64_t h = lane[0];
  for (int k = 1; k < 4; ++k) h = (h ^ lane[k]) * kPrime;
  for (; i < size; ++i) h = (h ^ bytes[i]) * kPrime;
  return h;
}

// Single-writer / single-reader snapshot exchange built as a triple buffer.
// The writer fills a private back buffer and swaps it into the shared middle
// slot with one atomic exchange; the reader swaps the middle slot into its
// private front buffer only when a fresh one is waiting. Neither side ever
// blocks, and the reader only sees buffers whose writes completed before the
// exchange, so a snapshot can never be observed half written.
template <typename T>
class SnapshotSlot {
 public:
  SnapshotSlot(std::string fingerprint, std::size_t value_count) {
    for (auto& b : buffers_) {
      b.fingerprint = fingerprint;
      b.values.assign(value_count, T{0});
    }
  }

  SnapshotSlot(const SnapshotSlot&) = delete;
  SnapshotSlot& operator=(const SnapshotSlot&) = delete;

  // Writer thread only. `fill` receives the back buffer's value span.
  template <typename Fill>
  void publish_with(Fill&& fill, std::uint64_t version) {
    WeightSnapshot<T>& back = buffers_[back_];
    publishing_.store(true, std::memory_order_relaxed);
    fill(std::span<T>(back.values));
    back.version = version;
    back.checksum = checksum_values(std::span<const T>(back.values));
    back_ = middle_.exchange(static_cast<std::uint8_t>(back_ | kFresh), std::memory_order_acq_rel) & kIndex;
    publishing_.store(false, std::memory_order_relaxed);
    latest_version_.store(version, std::memory_order_release);
    latest_version_.notify_all();
  }

  void publish(std::span<const T> values, std::uint64_t version) {
    publish_with([&](std::span<T> dst) { std::copy(values.begin(), values.end(), dst.begin()); }, version);
  }

  // Reader thread only. Newest completed snapshot, or nullptr before the
  // first publication. The pointer stays valid until the next latest() call.
  const WeightSnapshot<T>* latest() {
    reads_.fetch_add(1, std::memory_order_relaxed);
    if (publishing_.load(std::memory_order_relaxed)) overlapped_reads_.fetch_add(1, std::memory_order_relaxed);
    if (middle_.load(std::memory_order_acquire) & kFresh) {
      front_ = middle_.exchange(front_, std::memory_order_acq_rel) & kIndex;
    }
    const WeightSnapshot<T>& front = buffers_[front_];
    return front.version == 0 ? nullptr : &front;
  }

  // Any thread.
  std::uint64_t latest_version() const noexcept { return latest_version_.load(std::memory_order_acquire); }
  void wait_for_version_above(std::uint64_t old) const noexcept { latest_version_.wait(old, std::memory_order_acquire); }

  std::uint64_t reads() const noexcept { return reads_.load(std::memory_order_relaxed); }
  // Reads served while a publication was in flight; they return the
  // previous snapshot instead of waiting.
  std::uint64_t overlapped_reads() const noexcept { return overlapped_reads_.load(std::memory_order_relaxed); }
  // Blocking waits on the read path. The triple buffer has no lock or spin on
  // that path, so this stays zero; it is exported for the pipeline audit.
  std::uint64_t read_lock_waits() const noexcept { return read_lock_waits_.load(std::memory_order_relaxed); }

 private:
  static constexpr std::uint8_t kIndex = 0x3;
  static constexpr std::uint8_t kFresh = 0x4;
  static_assert(std::atomic<std::uint8_t>::is_always_lock_free);

  std::array<WeightSnapshot<T>, 3> buffers_;
  std::atomic<std::uint8_t> middle_{1};
  std::uint8_t front_ = 0;  // reader-owned
  std::uint8_t back_ = 2;   // writer-owned
  std::atomic<bool> publishing_{false};
  std::atomic<std::uint64_t> latest_version_{0};
  std::atomic<std::uint64_t> reads_{0};
  std::atomic<std::uint64_t> overlapped_reads_{0};
  std::atomic<std::uint64_t> read_lock_waits_{0};
};

// On-disk snapshot (all integers little-endian):
//   "ADLS" | u16 format version | u64 snapshot version |
//   u32 fingerprint length | fingerprint UTF-8 | u32 record count |
//   records: u32 name length | name | u32 rank | rank x u64 extents |
//            u8 scalar width (4 or 8) | IEEE-754 values
constexpr std::uint16_t kSnapshotFormatVersion = 1;

struct SnapshotRecord {
  std::string name;
  Shape shape;
  std::uint8_t scalar_width = 8;
  std::vector<double> values;
};

struct SnapshotFile {
  std::uint16_t format_version = kSnapshotFormatVersion;
  std::uint64_t version = 0;
  std::string fingerprint;
  std::vector<SnapshotRecord> records;
};

template <typename T>
void write_snapshot_file(const std::string& path, Model<T>& model, std::uint64_t version);

SnapshotFile read_snapshot_file(const std::string& path);

// Copies records into a model with the same fingerprint and parameter layout.
template <typename T>
void load_snapshot(const SnapshotFile& file, Model<T>& model);

}  // namespace adls
