#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adls/bounded_fifo.hpp"
#include "adls/error.hpp"
#include "adls/model.hpp"
#include "adls/optimizer.hpp"
#include "adls/prequential.hpp"
#include "adls/stream_source.hpp"

namespace adls {

struct PipelineConfig {
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 4096;
  std::size_t snapshot_every = 1;    // publish after this many trained batches
  std::size_t warmup_instances = 0;  // 0 means one batch
  Backpressure backpressure = Backpressure::block;
  std::size_t replay_window = 0;     // 0 disables replay
  bool deterministic = false;        // single-threaded, byte-reproducible
  std::uint64_t seed = 1;            // replay sampling and jitter
  // Test hooks.
  std::uint32_t jitter_us = 0;       // random sleeps of up to this many microseconds
  std::size_t fail_at_batch = 0;     // make the n-th training batch throw (1-based)
};

void validate(const PipelineConfig& config);
std::size_t effective_warmup(const PipelineConfig& config);

struct Prediction {
  std::uint64_t seq = 0;
  std::size_t true_label = 0;
  std::size_t predicted = 0;
  std::uint64_t model_version = 0;
  double latency_ms = 0.0;     // snapshot pickup, forward pass and evaluator update
  double queue_wait_ms = 0.0;  // arrival to start of classification
  double kappa = 0.0;          // prequential kappa after this instance
  std::int64_t predicted_ns = 0;
};

struct LatencyStats {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p99_ms = 0.0;  // nearest rank
};

// Zero counts for an empty sample.
LatencyStats summarize_latencies(std::vector<double> samples_ms);
// Classification latency of a prediction log; throws InputError when empty.
LatencyStats measure_rate(std::span<const Prediction> predictions);

struct TrainingRecord {
  std::uint64_t seq = 0;
  std::int64_t trained_ns = 0;  // when the batch holding this instance started training
  bool warmup = false;
};

struct StreamReport {
  std::vector<Prediction> predictions;
  std::vector<TrainingRecord> training_log;
  KappaSummary kappa;
  double final_accuracy = 0.0;
  LatencyStats latency;
  LatencyStats queue_wait;
  std::uint64_t instances_seen = 0;
  std::uint64_t warmup_instances = 0;
  std::uint64_t instances_trained = 0;
  std::uint64_t unpredicted = 0;  // arrivals that found no snapshot (trainer failed in warmup)
  std::uint64_t discarded_after_failure = 0;
  std::uint64_t dropped = 0;
  std::uint64_t malformed = 0;
  std::uint64_t batches = 0;
  std::uint64_t optimizer_steps = 0;
  std::uint64_t snapshots_published = 0;
  std::uint64_t snapshot_reads = 0;
  std::uint64_t snapshot_read_lock_waits = 0;
  std::uint64_t overlapped_reads = 0;
  std::uint64_t torn_reads = 0;  // snapshot checksum mismatches seen by the classifier
  std::uint64_t version_regressions = 0;
  double last_loss = 0.0;
  double wall_seconds = 0.0;
  bool deterministic = false;
  std::optional<ErrorKind> error_kind;
  std::string error;  // empty on success
  std::string error_subject;
};

// Drives the dual pipeline over `source`: predictions use the latest published
// snapshot, every instance is handed to training only after its prediction is
// recorded, and training publishes a new snapshot every `snapshot_every`
// batches. Worker failures end the run cleanly; the partial report carries
// the cause. Configuration errors throw.
StreamReport run_stream(StreamSource& source, const ModelSpec& spec, const OptimizerConfig& optimizer,
                        const PipelineConfig& config, PrequentialState& evaluator, std::uint64_t model_seed);

}  // namespace adls
