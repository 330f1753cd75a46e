#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "adls/dataset.hpp"
#include "adls/engine.hpp"
#include "adls/model.hpp"
#include "adls/optimizer.hpp"
#include "adls/stats.hpp"

namespace adls {

enum class SourceKind { dataset, socket, synthetic };

const char* to_string(SourceKind kind);
SourceKind parse_source_kind(const std::string& name);

struct ExperimentConfig {
  SourceKind source = SourceKind::dataset;
  std::vector<std::string> dataset_paths;  // required for the dataset source
  std::uint16_t port = 0;
  std::size_t socket_features = 0;
  std::size_t socket_classes = 0;
  int socket_timeout_ms = 0;
  SyntheticConfig synthetic;
  Architecture architecture = Architecture::mlp;
  Precision precision = Precision::f32;
  double dropout = 0.2;
  double alpha = 0.99;
  std::uint64_t seed = 1;
  double rate = 0.0;  // instances per second; 0 replays as fast as possible
  Normalization normalization = Normalization::none;
  PipelineConfig pipeline;
  OptimizerConfig optimizer;
  std::size_t threads = 2;  // 1 selects the serialized deterministic mode
  std::string output_dir = "adls_out";
};

// Keys accepted by set_option and written by serialize, in file order.
const std::vector<std::string>& config_keys();

// Throws ConfigError naming the key on an unknown key or a bad value.
void set_option(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string get_option(const ExperimentConfig& config, const std::string& key);

// Flat "key = value" lines; blank lines and '#' comments are ignored.
void apply_config_text(ExperimentConfig& config, std::istream& in, const std::string& origin);
void apply_config_file(ExperimentConfig& config, const std::string& path);
// ADLS_OUTPUT_DIR and ADLS_THREADS.
void apply_environment(ExperimentConfig& config);

// Every key, one per line; apply_config_text reproduces the config exactly.
std::string serialize(const ExperimentConfig& config);

// Throws ConfigError (or InputError for a missing dataset source).
void validate(const ExperimentConfig& config);
bool deterministic(const ExperimentConfig& config);

struct ParameterCounts {
  std::uint64_t all_trainable = 0;
  std::uint64_t weights_only = 0;
  std::uint64_t published_formula = 0;
  std::int64_t residual = 0;  // published_formula - weights_only
};

ParameterCounts count_parameters(const ModelSpec& spec);

struct RunResult {
  std::string dataset;
  ModelSpec spec;
  ParameterCounts parameters;
  StreamReport report;
  std::vector<std::string> files;  // written outputs
};

// Builds the source and model, runs the pipeline and writes
// predictions.csv, summary.json and config.txt (plus timings.csv in
// deterministic mode, where the latency column is left empty so the
// predictions file is byte-reproducible). A run that ended in a worker
// failure still writes its partial outputs; the report carries the error.
RunResult run_experiment(const ExperimentConfig& config, bool write_outputs = true);

std::string predictions_csv(const StreamReport& report);
std::string timings_csv(const StreamReport& report);
std::string summary_json(const RunResult& result, const ExperimentConfig& config);

struct Comparison {
  ResultMatrix matrix;
  std::vector<double> ranks;
  FriedmanResult friedman;
  PosthocReport posthoc;
};

// Either a single result-matrix CSV or several summary.json files (one cell
// each, keyed by dataset and architecture).
Comparison compare_files(const std::vector<std::string>& paths, double alpha = 0.05);
Comparison compare_matrix(ResultMatrix matrix, double alpha = 0.05);
std::string comparison_text(const Comparison& c);
std::string ranks_csv(const Comparison& c);
std::string posthoc_csv(const Comparison& c);

struct BenchRow {
  Architecture architecture = Architecture::mlp;
  LatencyStats latency;
  double throughput_per_s = 0.0;  // 1000 / mean classify ms
  double final_kappa = 0.0;
  std::uint64_t parameters = 0;
};

struct BenchResult {
  std::string dataset;
  bool serialized = true;
  std::vector<BenchRow> rows;
  std::string ordering;  // architectures by mean latency, "A < B < ..."; empty for one row
};

// Runs each architecture on the identical stream. With `serialized` the
// trainer runs in the classifier's thread between predictions, so classify
// latencies are not inflated by CPU contention with the trainer.
BenchResult bench(const ExperimentConfig& base, const std::vector<Architecture>& architectures,
                  bool serialized = true);
std::string bench_csv(const BenchResult& b);
std::string bench_text(const BenchResult& b);

// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace adls
