#include "adls/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

#include "adls/snapshot.hpp"

namespace adls {

using Clock = std::chrono::steady_clock;

void validate(const PipelineConfig& config) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive", "batch_size");
  if (config.buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive", "buffer_capacity");
  if (config.snapshot_every == 0) throw ConfigError("snapshot_every must be positive", "snapshot_every");
}

std::size_t effective_warmup(const PipelineConfig& config) {
  return config.warmup_instances == 0 ? config.batch_size : config.warmup_instances;
}

LatencyStats summarize_latencies(std::vector<double> samples) {
  LatencyStats s;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean_ms = sum / static_cast<double>(samples.size());
  const std::size_t n = samples.size();
  s.median_ms = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
  s.p99_ms = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

LatencyStats measure_rate(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw InputError("cannot measure the rate of an empty prediction log");
  std::vector<double> v;
  v.reserve(predictions.size());
  for (const Prediction& p : predictions) v.push_back(p.latency_ms);
  return summarize_latencies(std::move(v));
}

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  std::int64_t ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
  }

 private:
  Clock::time_point start_;
};

double ms_between(std::int64_t a, std::int64_t b) { return static_cast<double>(b - a) / 1e6; }

class Jitter {
 public:
  Jitter(std::uint32_t max_us, std::uint64_t seed) : max_us_(max_us), rng_(seed) {}
  void operator()() {
    if (max_us_ == 0) return;
    const std::uint64_t r = rng_();
    if (r % 3 == 0) {
      std::this_thread::yield();
    } else if (r % 3 == 1) {
      std::this_thread::sleep_for(std::chrono::microseconds((r >> 8) % (max_us_ + 1)));
    }
  }

 private:
  std::uint32_t max_us_;
  std::mt19937_64 rng_;
};

void record_error(StreamReport& report, std::mutex& m, const Error& e) {
  std::lock_guard lock(m);
  if (report.error.empty()) {
    report.error = e.what();
    report.error_kind = e.kind();
    report.error_subject = e.subject();
  }
}

// Owns the training model and optimizer; only the training thread touches it.
template <typename T>
class TrainingWorker {
 public:
  TrainingWorker(const ModelSpec& spec, std::uint64_t seed, const OptimizerConfig& opt, const PipelineConfig& config,
                 const Stopwatch& clock)
      : model_(spec, seed), optimizer_(opt), config_(config), clock_(clock),
        replay_rng_(config.seed ^ 0x5851f42d4c957f2dULL), jitter_(config.jitter_us, config.seed + 3) {
    model_.set_mode(kernels::Mode::train);
  }

  // Trains one batch. After a failure every later batch is discarded.
  void train(std::vector<Instance> batch, bool warmup) {
    if (batch.empty()) return;
    if (failed_) {
      discarded_ += batch.size();
      return;
    }
    jitter_();
    const std::int64_t t = clock_.ns();
    try {
      ++batches_;
      if (config_.fail_at_batch != 0 && batches_ == config_.fail_at_batch) {
        throw TrainingError("injected failure at batch " + std::to_string(batches_));
      }
      last_loss_ = model_.train_batch(batch, optimizer_);
      for (const Instance& inst : batch) log_.push_back({inst.seq, t, warmup});
      trained_ += batch.size();
      if (config_.replay_window > 0) replay(batch);
    } catch (const Error& e) {
      fail(e, batch.size());
      return;
    }
    if (!warmup && ++since_publish_ >= config_.snapshot_every) publish();
  }

  void attach(SnapshotSlot<T>& slot) noexcept { slot_ = &slot; }
  std::size_t value_count() const noexcept { return model_.value_count(); }

  // Publishes the current weights as the next version unless training failed.
  void publish() {
    if (failed_) return;
    since_publish_ = 0;
    slot_->publish_with([&](std::span<T> dst) { model_.copy_values(dst); }, ++version_);
  }

  // Makes the last trained batches visible.
  void finish() {
    if (since_publish_ > 0) publish();
  }

  bool failed() const noexcept { return failed_; }
  const std::optional<Error>& error() const noexcept { return error_; }
  std::uint64_t trained() const noexcept { return trained_; }
  std::uint64_t batches() const noexcept { return batches_; }
  std::uint64_t discarded() const noexcept { return discarded_; }
  std::uint64_t published() const noexcept { return version_; }
  std::uint64_t optimizer_steps() const noexcept { return optimizer_.steps(); }
  double last_loss() const noexcept { return last_loss_; }
  std::vector<TrainingRecord>& log() noexcept { return log_; }

 private:
  void replay(const std::vector<Instance>& batch) {
    for (const Instance& inst : batch) {
      replay_.push_back(inst);
      if (replay_.size() > config_.replay_window) replay_.pop_front();
    }
    std::vector<Instance> sample;
    const std::size_t n = std::min(config_.batch_size, replay_.size());
    sample.reserve(n);
    for (std::size_t i = 0; i < n; ++i) sample.push_back(replay_[replay_rng_() % replay_.size()]);
    last_loss_ = model_.train_batch(sample, optimizer_);
  }

  void fail(const Error& e, std::size_t lost) {
    failed_ = true;
    error_.emplace(e.kind(), e.what(), e.subject());
    discarded_ += lost;
  }

  Model<T> model_;
  Optimizer<T> optimizer_;
  const PipelineConfig& config_;
  SnapshotSlot<T>* slot_ = nullptr;
  const Stopwatch& clock_;
  std::mt19937_64 replay_rng_;
  Jitter jitter_;
  std::deque<Instance> replay_;
  std::vector<TrainingRecord> log_;
  std::uint64_t version_ = 0;
  std::uint64_t trained_ = 0;
  std::uint64_t batches_ = 0;
  std::uint64_t discarded_ = 0;
  std::size_t since_publish_ = 0;
  double last_loss_ = 0.0;
  bool failed_ = false;
  std::optional<Error> error_;
};

// Owns the inference model and the evaluator; only the classifying thread
// touches it.
template <typename T>
class Classifier {
 public:
  Classifier(const ModelSpec& spec, std::uint64_t seed, SnapshotSlot<T>& slot, PrequentialState& evaluator,
             const Stopwatch& clock, StreamReport& report)
      : model_(spec, seed), slot_(slot), evaluator_(evaluator), clock_(clock), report_(report) {}

  // False when no snapshot has been published yet.
  bool classify(const Instance& inst, std::int64_t arrival_ns) {
    const std::int64_t start = clock_.ns();
    const WeightSnapshot<T>* snap = slot_.latest();
    if (snap == nullptr) return false;
    if (snap->version != loaded_version_) {
      if (checksum_values(std::span<const T>(snap->values)) != snap->checksum) ++report_.torn_reads;
      if (snap->version < loaded_version_) ++report_.version_regressions;
      model_.load_values(snap->values);
      loaded_version_ = snap->version;
    }
    const std::size_t predicted = model_.predict(inst.features);
    evaluator_.update(inst.label, predicted);
    const double kappa = evaluator_.kappa();
    const std::int64_t end = clock_.ns();
    Prediction p;
    p.seq = inst.seq;
    p.true_label = inst.label;
    p.predicted = predicted;
    p.model_version = loaded_version_;
    p.latency_ms = ms_between(start, end);
    p.queue_wait_ms = ms_between(arrival_ns, start);
    p.kappa = kappa;
    p.predicted_ns = end;
    report_.predictions.push_back(p);
    return true;
  }

 private:
  Model<T> model_;
  SnapshotSlot<T>& slot_;
  PrequentialState& evaluator_;
  const Stopwatch& clock_;
  StreamReport& report_;
  std::uint64_t loaded_version_ = 0;
};

struct Arrival {
  Instance instance;
  std::int64_t arrival_ns = 0;
};

template <typename T>
void run_serial(StreamSource& source, TrainingWorker<T>& trainer, Classifier<T>& classifier,
                const PipelineConfig& config, const Stopwatch& clock, StreamReport& report) {
  const std::size_t warmup = effective_warmup(config);
  std::vector<Instance> pending;
  bool warm = false;
  while (auto inst = source.next()) {
    ++report.instances_seen;
    if (!warm) {
      pending.push_back(std::move(*inst));
      ++report.warmup_instances;
      if (pending.size() == config.batch_size || report.instances_seen == warmup) {
        trainer.train(std::exchange(pending, {}), true);
      }
      if (report.instances_seen == warmup) {
        trainer.publish();
        warm = true;
      }
      continue;
    }
    if (!classifier.classify(*inst, clock.ns())) ++report.unpredicted;
    pending.push_back(std::move(*inst));
    if (pending.size() == config.batch_size) trainer.train(std::exchange(pending, {}), false);
  }
  if (!warm) {
    trainer.train(std::exchange(pending, {}), true);
    trainer.publish();
  } else {
    trainer.train(std::exchange(pending, {}), false);
  }
  trainer.finish();
}

template <typename T>
void run_concurrent(StreamSource& source, TrainingWorker<T>& trainer, Classifier<T>& classifier,
                    const PipelineConfig& config, const Stopwatch& clock,
                    StreamReport& report) {
  const std::size_t warmup = effective_warmup(config);
  BoundedFifo<Arrival> arrivals(config.buffer_capacity, Backpressure::block);
  BoundedFifo<Instance> training(config.buffer_capacity, config.backpressure);
  std::atomic<bool> warm{false};
  std::mutex error_mutex;

  auto signal_warm = [&] {
    warm.store(true, std::memory_order_release);
    warm.notify_all();
  };

  std::thread feeder([&] {
    Jitter jitter(config.jitter_us, config.seed + 1);
    std::uint64_t seen = 0;
    try {
      while (auto inst = source.next()) {
        jitter();
        ++seen;
        const bool ok = seen <= warmup ? training.enqueue(std::move(*inst))
                                       : arrivals.enqueue({std::move(*inst), clock.ns()});
        if (!ok) break;
      }
    } catch (const Error& e) {
      record_error(report, error_mutex, e);
    }
    report.instances_seen = seen;
    report.warmup_instances = std::min<std::uint64_t>(seen, warmup);
    arrivals.close();
    // A short stream never fills the warmup; release the trainer.
    if (seen < warmup) training.close();
  });

  std::thread train_thread([&] {
    std::size_t remaining = warmup;
    while (remaining > 0) {
      std::vector<Instance> batch = training.next_batch(std::min(config.batch_size, remaining));
      if (batch.empty()) break;
      remaining -= batch.size();
      trainer.train(std::move(batch), true);
    }
    trainer.publish();
    signal_warm();
    while (true) {
      std::vector<Instance> batch = training.next_batch(config.batch_size);
      if (batch.empty()) break;
      trainer.train(std::move(batch), false);
    }
    trainer.finish();
  });

  std::thread classify_thread([&] {
    Jitter jitter(config.jitter_us, config.seed + 2);
    bool waited = false;
    try {
      while (true) {
        std::vector<Arrival> next = arrivals.next_batch(1);
        if (next.empty()) break;
        if (!waited) {
          warm.wait(false, std::memory_order_acquire);
          waited = true;
        }
        jitter();
        Arrival& a = next.front();
        if (!classifier.classify(a.instance, a.arrival_ns)) ++report.unpredicted;
        training.enqueue(std::move(a.instance));
      }
    } catch (const Error& e) {
      record_error(report, error_mutex, e);
      arrivals.close();
    }
    training.close();
  });

  feeder.join();
  classify_thread.join();
  train_thread.join();
  report.dropped = training.dropped();
}

template <typename T>
StreamReport run_typed(StreamSource& source, const ModelSpec& spec, const OptimizerConfig& opt,
                       const PipelineConfig& config, PrequentialState& evaluator, std::uint64_t model_seed) {
  if (evaluator.classes() != spec.classes) {
    throw ConfigError("evaluator has " + std::to_string(evaluator.classes()) + " classes, model has " +
                      std::to_string(spec.classes));
  }
  if (source.features() != 0 && source.features() != spec.features) {
    throw ConfigError("stream delivers " + std::to_string(source.features()) + " features, model expects " +
                      std::to_string(spec.features));
  }
  Stopwatch clock;
  StreamReport report;
  report.deterministic = config.deterministic;

  TrainingWorker<T> trainer(spec, model_seed, opt, config, clock);
  SnapshotSlot<T> slot(spec_fingerprint(spec), trainer.value_count());
  trainer.attach(slot);
  Classifier<T> classifier(spec, model_seed, slot, evaluator, clock, report);

  if (config.deterministic) {
    try {
      run_serial(source, trainer, classifier, config, clock, report);
    } catch (const Error& e) {
      std::mutex m;
      record_error(report, m, e);
    }
  } else {
    run_concurrent(source, trainer, classifier, config, clock, report);
  }

  if (trainer.error() && report.error.empty()) {
    report.error = trainer.error()->what();
    report.error_kind = trainer.error()->kind();
    report.error_subject = trainer.error()->subject();
  }
  report.training_log = std::move(trainer.log());
  report.instances_trained = trainer.trained();
  report.discarded_after_failure = trainer.discarded();
  report.batches = trainer.batches();
  report.optimizer_steps = trainer.optimizer_steps();
  report.snapshots_published = trainer.published();
  report.last_loss = trainer.last_loss();
  report.snapshot_reads = slot.reads();
  report.snapshot_read_lock_waits = slot.read_lock_waits();
  report.overlapped_reads = slot.overlapped_reads();
  report.malformed = source.malformed();

  std::vector<double> trace;
  trace.reserve(report.predictions.size());
  for (const Prediction& p : report.predictions) trace.push_back(p.kappa);
  report.kappa = stream_summary(trace);
  report.final_accuracy = evaluator.count() > 0 ? evaluator.accuracy() : 0.0;
  std::vector<double> latencies, waits;
  latencies.reserve(report.predictions.size());
  waits.reserve(report.predictions.size());
  for (const Prediction& p : report.predictions) {
    latencies.push_back(p.latency_ms);
    waits.push_back(p.queue_wait_ms);
  }
  report.latency = summarize_latencies(std::move(latencies));
  report.queue_wait = summarize_latencies(std::move(waits));
  report.wall_seconds = static_cast<double>(clock.ns()) / 1e9;
  return report;
}

}  // namespace

StreamReport run_stream(StreamSource& source, const ModelSpec& spec, const OptimizerConfig& optimizer,
                        const PipelineConfig& config, PrequentialState& evaluator, std::uint64_t model_seed) {
  validate(spec);
  validate(config);
  if (spec.precision == Precision::f64) {
    return run_typed<double>(source, spec, optimizer, config, evaluator, model_seed);
  }
  return run_typed<float>(source, spec, optimizer, config, evaluator, model_seed);
}

}  // namespace adls
