#include "adls/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adls/prequential.hpp"
#include "adls/stream_source.hpp"
#include "adls/text.hpp"

namespace adls {

using json = nlohmann::ordered_json;

const char* to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::dataset: return "dataset";
    case SourceKind::socket: return "socket";
    case SourceKind::synthetic: return "synthetic";
  }
  return "?";
}

SourceKind parse_source_kind(const std::string& name) {
  if (name == "dataset") return SourceKind::dataset;
  if (name == "socket") return SourceKind::socket;
  if (name == "synthetic") return SourceKind::synthetic;
  throw ConfigError("unknown source '" + name + "' (expected dataset, socket or synthetic)", "source");
}

namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  unsigned long long out = 0;
  if (!text::parse_unsigned(v, out)) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'", key);
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!text::parse_double(v, out)) throw ConfigError(key + ": expected a number, got '" + v + "'", key);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'", key);
}

template <typename Parse>
auto rethrow_with_key(const std::string& key, Parse&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what(), key);
  }
}

struct Option {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Option>& options() {
  static const std::vector<Option> table = [] {
    std::vector<Option> t;
    auto add = [&](std::string key, auto set, auto get) { t.push_back({std::move(key), set, get}); };
    add("source", [](ExperimentConfig& c, const std::string& v) { c.source = parse_source_kind(v); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.source)); });
    add("dataset",
        [](ExperimentConfig& c, const std::string& v) {
          c.dataset_paths.clear();
          for (const std::string& p : text::split(v, ',')) {
            const std::string t = text::trim(p);
            if (!t.empty()) c.dataset_paths.push_back(t);
          }
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.dataset_paths.size(); ++i) out += (i ? "," : "") + c.dataset_paths[i];
          return out;
        });
    add("port",
        [](ExperimentConfig& c, const std::string& v) {
          const std::uint64_t p = to_u64("port", v);
          if (p > 65535) throw ConfigError("port: out of range", "port");
          c.port = static_cast<std::uint16_t>(p);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.port); });
    add("features", [](ExperimentConfig& c, const std::string& v) { c.socket_features = to_size("features", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.socket_features); });
    add("classes", [](ExperimentConfig& c, const std::string& v) { c.socket_classes = to_size("classes", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.socket_classes); });
    add("socket_timeout_ms",
        [](ExperimentConfig& c, const std::string& v) {
          c.socket_timeout_ms = static_cast<int>(std::min<std::uint64_t>(to_u64("socket_timeout_ms", v), 1u << 30));
        },
        [](const ExperimentConfig& c) { return std::to_string(c.socket_timeout_ms); });
    add("synthetic_instances",
        [](ExperimentConfig& c, const std::string& v) { c.synthetic.instances = to_size("synthetic_instances", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.synthetic.instances); });
    add("synthetic_length",
        [](ExperimentConfig& c, const std::string& v) { c.synthetic.length = to_size("synthetic_length", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.synthetic.length); });
    add("synthetic_classes",
        [](ExperimentConfig& c, const std::string& v) { c.synthetic.classes = to_size("synthetic_classes", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.synthetic.classes); });
    add("synthetic_snr_db",
        [](ExperimentConfig& c, const std::string& v) { c.synthetic.snr_db = to_real("synthetic_snr_db", v); },
        [](const ExperimentConfig& c) { return fmt(c.synthetic.snr_db); });
    add("synthetic_cycles",
        [](ExperimentConfig& c, const std::string& v) { c.synthetic.base_cycles = to_real("synthetic_cycles", v); },
        [](const ExperimentConfig& c) { return fmt(c.synthetic.base_cycles); });
    add("model",
        [](ExperimentConfig& c, const std::string& v) {
          c.architecture = rethrow_with_key("model", [&] { return parse_architecture(v); });
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.architecture)); });
    add("precision",
        [](ExperimentConfig& c, const std::string& v) {
          c.precision = rethrow_with_key("precision", [&] { return parse_precision(v); });
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.precision)); });
    add("dropout", [](ExperimentConfig& c, const std::string& v) { c.dropout = to_real("dropout", v); },
        [](const ExperimentConfig& c) { return fmt(c.dropout); });
    add("alpha", [](ExperimentConfig& c, const std::string& v) { c.alpha = to_real("alpha", v); },
        [](const ExperimentConfig& c) { return fmt(c.alpha); });
    add("seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); });
    add("rate", [](ExperimentConfig& c, const std::string& v) { c.rate = to_real("rate", v); },
        [](const ExperimentConfig& c) { return fmt(c.rate); });
    add("normalization",
        [](ExperimentConfig& c, const std::string& v) {
          c.normalization = rethrow_with_key("normalization", [&] { return parse_normalization(v); });
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.normalization)); });
    add("batch_size", [](ExperimentConfig& c, const std::string& v) { c.pipeline.batch_size = to_size("batch_size", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.pipeline.batch_size); });
    add("buffer_capacity",
        [](ExperimentConfig& c, const std::string& v) { c.pipeline.buffer_capacity = to_size("buffer_capacity", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.pipeline.buffer_capacity); });
    add("snapshot_every",
        [](ExperimentConfig& c, const std::string& v) { c.pipeline.snapshot_every = to_size("snapshot_every", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.pipeline.snapshot_every); });
    add("warmup_instances",
        [](ExperimentConfig& c, const std::string& v) { c.pipeline.warmup_instances = to_size("warmup_instances", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.pipeline.warmup_instances); });
    add("backpressure",
        [](ExperimentConfig& c, const std::string& v) {
          c.pipeline.backpressure = rethrow_with_key("backpressure", [&] { return parse_backpressure(v); });
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.pipeline.backpressure)); });
    add("replay_window",
        [](ExperimentConfig& c, const std::string& v) { c.pipeline.replay_window = to_size("replay_window", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.pipeline.replay_window); });
    add("deterministic",
        [](ExperimentConfig& c, const std::string& v) { c.pipeline.deterministic = to_bool("deterministic", v); },
        [](const ExperimentConfig& c) { return std::string(c.pipeline.deterministic ? "true" : "false"); });
    add("threads", [](ExperimentConfig& c, const std::string& v) { c.threads = to_size("threads", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.threads); });
    add("optimizer",
        [](ExperimentConfig& c, const std::string& v) {
          c.optimizer.kind = rethrow_with_key("optimizer", [&] { return parse_optimizer_kind(v); });
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.optimizer.kind)); });
    add("learning_rate",
        [](ExperimentConfig& c, const std::string& v) { c.optimizer.learning_rate = to_real("learning_rate", v); },
        [](const ExperimentConfig& c) { return fmt(c.optimizer.learning_rate); });
    add("output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
        [](const ExperimentConfig& c) { return c.output_dir; });
    return t;
  }();
  return table;
}

const Option& find_option(const std::string& key) {
  for (const Option& o : options()) {
    if (o.key == key) return o;
  }
  throw ConfigError("unknown configuration key '" + key + "'", key);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Option& o : options()) k.push_back(o.key);
    return k;
  }();
  return keys;
}

void set_option(ExperimentConfig& config, const std::string& key, const std::string& value) {
  find_option(key).set(config, text::trim(value));
}

std::string get_option(const ExperimentConfig& config, const std::string& key) { return find_option(key).get(config); }

void apply_config_text(ExperimentConfig& config, std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value", origin);
    }
    const std::string key = text::trim(std::string_view(t).substr(0, eq));
    try {
      set_option(config, key, t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what(), e.subject());
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config file not found: " + path, path);
  apply_config_text(config, in, path);
}

void apply_environment(ExperimentConfig& config) {
  if (const char* dir = std::getenv("ADLS_OUTPUT_DIR"); dir != nullptr && *dir != '\0') config.output_dir = dir;
  if (const char* threads = std::getenv("ADLS_THREADS"); threads != nullptr && *threads != '\0') {
    set_option(config, "threads", threads);
  }
}

std::string serialize(const ExperimentConfig& config) {
  std::string out;
  for (const Option& o : options()) out += o.key + " = " + o.get(config) + "\n";
  return out;
}

bool deterministic(const ExperimentConfig& config) { return config.pipeline.deterministic || config.threads == 1; }

void validate(const ExperimentConfig& config) {
  if (config.threads == 0) throw ConfigError("threads must be at least 1", "threads");
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]", "alpha");
  if (!(config.rate >= 0.0)) throw ConfigError("rate must be >= 0", "rate");
  if (!(config.optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive", "learning_rate");
  validate(config.pipeline);
  switch (config.source) {
    case SourceKind::dataset:
      if (config.dataset_paths.empty()) throw InputError("no dataset given (set dataset = path)", "dataset");
      break;
    case SourceKind::socket:
      if (config.socket_features == 0 || config.socket_classes < 2) {
        throw ConfigError("socket source needs features >= 1 and classes >= 2", "features");
      }
      break;
    case SourceKind::synthetic:
      break;
  }
}

ParameterCounts count_parameters(const ModelSpec& spec) {
  Model<float> model(spec, 0);
  ParameterCounts p;
  p.all_trainable = model.parameter_count(CountConvention::all_trainable);
  p.weights_only = model.parameter_count(CountConvention::weights_only);
  p.published_formula = published_parameter_formula(spec);
  p.residual = static_cast<std::int64_t>(p.published_formula) - static_cast<std::int64_t>(p.weights_only);
  return p;
}

std::string predictions_csv(const StreamReport& report) {
  std::string out = "seq,true,predicted,model_version,latency_ms,prequential_kappa\n";
  for (const Prediction& p : report.predictions) {
    out += std::to_string(p.seq) + "," + std::to_string(p.true_label) + "," + std::to_string(p.predicted) + "," +
           std::to_string(p.model_version) + "," + (report.deterministic ? "" : fixed(p.latency_ms, 6)) + "," +
           fmt(p.kappa) + "\n";
  }
  return out;
}

std::string timings_csv(const StreamReport& report) {
  std::string out = "seq,latency_ms,queue_wait_ms\n";
  for (const Prediction& p : report.predictions) {
    out += std::to_string(p.seq) + "," + fixed(p.latency_ms, 6) + "," + fixed(p.queue_wait_ms, 6) + "\n";
  }
  return out;
}

namespace {

json latency_json(const LatencyStats& s) {
  return json{{"count", s.count}, {"mean_ms", s.mean_ms}, {"median_ms", s.median_ms}, {"p99_ms", s.p99_ms}};
}

}  // namespace

std::string summary_json(const RunResult& r, const ExperimentConfig& config) {
  const StreamReport& rep = r.report;
  json j;
  j["dataset"] = r.dataset;
  j["architecture"] = to_string(r.spec.architecture);
  j["features"] = r.spec.features;
  j["classes"] = r.spec.classes;
  j["seed"] = config.seed;
  j["mode"] = rep.deterministic ? "deterministic" : "concurrent";
  j["final_kappa"] = rep.kappa.final_kappa;
  j["mean_kappa"] = rep.kappa.mean_kappa;
  j["final_accuracy"] = rep.final_accuracy;
  j["instances"] = rep.instances_seen;
  j["warmup_instances"] = rep.warmup_instances;
  j["predictions"] = rep.predictions.size();
  j["unpredicted"] = rep.unpredicted;
  j["instances_trained"] = rep.instances_trained;
  j["dropped"] = rep.dropped;
  j["malformed"] = rep.malformed;
  j["discarded_after_failure"] = rep.discarded_after_failure;
  j["batches"] = rep.batches;
  j["optimizer_steps"] = rep.optimizer_steps;
  j["snapshots_published"] = rep.snapshots_published;
  j["latency"] = latency_json(rep.latency);
  j["queue_wait"] = latency_json(rep.queue_wait);
  j["throughput_per_s"] = rep.wall_seconds > 0 ? static_cast<double>(rep.instances_seen) / rep.wall_seconds : 0.0;
  j["wall_seconds"] = rep.wall_seconds;
  j["snapshot_reads"] = rep.snapshot_reads;
  j["snapshot_read_lock_waits"] = rep.snapshot_read_lock_waits;
  j["parameters"] = json{{"all_trainable", r.parameters.all_trainable},
                         {"weights_only", r.parameters.weights_only},
                         {"published_formula", r.parameters.published_formula},
                         {"formula_residual", r.parameters.residual}};
  if (rep.error.empty()) {
    j["error"] = nullptr;
  } else {
    j["error"] = json{{"kind", to_string(*rep.error_kind)}, {"message", rep.error}, {"subject", rep.error_subject}};
  }
  json cfg = json::object();
  for (const std::string& key : config_keys()) cfg[key] = get_option(config, key);
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message(), path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path, path);
  out << text;
  if (!out) throw IoError("write failed: " + path, path);
}

RunResult run_experiment(const ExperimentConfig& config, bool write_outputs) {
  validate(config);
  RunResult result;
  std::unique_ptr<StreamSource> source;
  std::size_t features = 0, classes = 0;

  auto from_dataset = [&](Dataset d) {
    d = normalize(std::move(d), config.normalization);
    result.dataset = d.name;
    features = d.length;
    classes = d.classes;
    source = std::make_unique<DatasetStream>(std::move(d), config.seed, config.rate);
  };
  switch (config.source) {
    case SourceKind::dataset:
      from_dataset(load_ucr(std::span<const std::string>(config.dataset_paths)));
      break;
    case SourceKind::synthetic: {
      SyntheticConfig s = config.synthetic;
      s.seed = config.seed;
      from_dataset(synthetic_sinusoids(s));
      break;
    }
    case SourceKind::socket: {
      SocketSource::Options o;
      o.port = config.port;
      o.features = config.socket_features;
      o.classes = config.socket_classes;
      o.accept_timeout_ms = config.socket_timeout_ms;
      features = o.features;
      classes = o.classes;
      result.dataset = "socket:" + std::to_string(config.port);
      source = std::make_unique<SocketSource>(o);
      break;
    }
  }

  result.spec.architecture = config.architecture;
  result.spec.features = features;
  result.spec.classes = classes;
  result.spec.dropout_rate = config.dropout;
  result.spec.precision = config.precision;
  validate(result.spec);
  result.parameters = count_parameters(result.spec);

  PipelineConfig pipeline = config.pipeline;
  pipeline.deterministic = deterministic(config);
  pipeline.seed = config.seed;
  PrequentialState evaluator(classes, config.alpha);
  result.report = run_stream(*source, result.spec, config.optimizer, pipeline, evaluator, config.seed);

  if (write_outputs) {
    const std::filesystem::path dir(config.output_dir);
    auto emit = [&](const std::string& name, const std::string& text) {
      const std::string path = (dir / name).string();
      write_text_file(path, text);
      result.files.push_back(path);
    };
    emit("config.txt", serialize(config));
    emit("predictions.csv", predictions_csv(result.report));
    if (result.report.deterministic) emit("timings.csv", timings_csv(result.report));
    emit("summary.json", summary_json(result, config));
  }
  return result;
}

// ---- compare -------------------------------------------------------------

Comparison compare_matrix(ResultMatrix matrix, double alpha) {
  validate(matrix);
  Comparison c;
  c.ranks = friedman_ranks(matrix);
  c.friedman = friedman_test(matrix);
  const auto z = pairwise_z(c.ranks, matrix.rows());
  c.posthoc = matrix.cols() <= kMaxBergmannHommelModels ? bergmann_hommel(z, matrix.cols(), alpha) : holm(z, alpha);
  c.matrix = std::move(matrix);
  return c;
}

namespace {

bool is_json_path(const std::string& p) {
  const std::string ext = std::filesystem::path(p).extension().string();
  return ext == ".json";
}

ResultMatrix matrix_from_summaries(const std::vector<std::string>& paths) {
  std::vector<std::string> models, datasets;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    if (!in) throw InputError("summary not found: " + path, path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(path + ": " + e.what(), path);
    }
    if (!j.contains("dataset") || !j.contains("architecture") || !j.contains("final_kappa") ||
        !j["final_kappa"].is_number()) {
      throw FormatError(path + ": summary needs dataset, architecture and final_kappa", path);
    }
    const std::string d = j["dataset"].get<std::string>(), m = j["architecture"].get<std::string>();
    if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);
    if (std::find(datasets.begin(), datasets.end(), d) == datasets.end()) datasets.push_back(d);
    if (!cells.emplace(std::make_pair(d, m), j["final_kappa"].get<double>()).second) {
      throw InputError("duplicate result for " + d + "/" + m + " in " + path, path);
    }
  }
  ResultMatrix matrix;
  matrix.models = models;
  matrix.datasets = datasets;
  std::string missing;
  for (const std::string& d : datasets) {
    for (const std::string& m : models) {
      const auto it = cells.find({d, m});
      if (it == cells.end()) {
        missing += (missing.empty() ? "" : ", ") + d + "/" + m;
        matrix.scores.push_back(0.0);
      } else {
        matrix.scores.push_back(it->second);
      }
    }
  }
  if (!missing.empty()) throw InputError("missing results: " + missing);
  return matrix;
}

// Higher average rank (worse model) first, as in "MLP vs CNN".
std::string hypothesis(const Comparison& c, const PosthocEntry& e) {
  const bool swap = c.ranks[e.second] > c.ranks[e.first];
  const std::string& a = c.matrix.models[swap ? e.second : e.first];
  const std::string& b = c.matrix.models[swap ? e.first : e.second];
  return a + " vs " + b;
}

std::vector<const PosthocEntry*> by_strength(const Comparison& c) {
  std::vector<const PosthocEntry*> out;
  for (const auto& e : c.posthoc.entries) out.push_back(&e);
  std::stable_sort(out.begin(), out.end(),
                   [](const PosthocEntry* a, const PosthocEntry* b) { return std::abs(a->z) > std::abs(b->z); });
  return out;
}

std::vector<std::size_t> rank_order(const Comparison& c) {
  std::vector<std::size_t> order(c.ranks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.ranks[a] < c.ranks[b]; });
  return order;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

Comparison compare_files(const std::vector<std::string>& paths, double alpha) {
  if (paths.empty()) throw InputError("compare needs a result matrix CSV or summary files");
  if (paths.size() == 1 && !is_json_path(paths.front())) {
    return compare_matrix(read_result_matrix_csv(paths.front()), alpha);
  }
  for (const std::string& p : paths) {
    if (!is_json_path(p)) throw InputError("mixing a result matrix with summary files: " + p, p);
  }
  return compare_matrix(matrix_from_summaries(paths), alpha);
}

std::string ranks_csv(const Comparison& c) {
  std::string out = "position,model,average_rank\n";
  std::size_t pos = 1;
  for (std::size_t i : rank_order(c)) out += std::to_string(pos++) + "," + c.matrix.models[i] + "," + fmt(c.ranks[i]) + "\n";
  return out;
}

std::string posthoc_csv(const Comparison& c) {
  std::string out = "hypothesis,z,p_value,adjusted_p,decision\n";
  for (const PosthocEntry* e : by_strength(c)) {
    out += hypothesis(c, *e) + "," + fmt(std::abs(e->z)) + "," + fmt(e->raw_p) + "," + fmt(e->adjusted_p) + "," +
           (e->reject ? "rejected" : "not rejected") + "\n";
  }
  return out;
}

std::string comparison_text(const Comparison& c) {
  std::ostringstream os;
  os << "Friedman ranking (" << c.matrix.rows() << " datasets, " << c.matrix.cols() << " models)\n";
  std::size_t width = 5;
  for (const auto& m : c.matrix.models) width = std::max(width, m.size() + 2);
  os << "  " << pad("pos", 5) << pad("model", width) << "average rank\n";
  std::size_t pos = 1;
  for (std::size_t i : rank_order(c)) {
    os << "  " << pad(std::to_string(pos++), 5) << pad(c.matrix.models[i], width) << fixed(c.ranks[i], 4) << "\n";
  }
  os << "  chi-square = " << fixed(c.friedman.statistic, 4) << " (df " << c.friedman.df << ", tie correction "
     << fixed(c.friedman.tie_correction, 4) << "), p = " << sci(c.friedman.p_value) << "\n\n";
  os << "Post-hoc (" << c.posthoc.method << ", alpha = " << c.posthoc.alpha << ")\n";
  std::size_t hw = 10;
  for (const auto& e : c.posthoc.entries) hw = std::max(hw, hypothesis(c, e).size() + 2);
  os << "  " << pad("hypothesis", hw) << pad("z", 10) << pad("p", 12) << pad("adjusted p", 12) << "decision\n";
  for (const PosthocEntry* e : by_strength(c)) {
    os << "  " << pad(hypothesis(c, *e), hw) << pad(fixed(std::abs(e->z), 4), 10) << pad(sci(e->raw_p), 12)
       << pad(sci(e->adjusted_p), 12) << (e->reject ? "rejected" : "not rejected") << "\n";
  }
  return os.str();
}

// ---- bench ---------------------------------------------------------------

BenchResult bench(const ExperimentConfig& base, const std::vector<Architecture>& architectures, bool serialized) {
  if (architectures.empty()) throw ConfigError("bench needs at least one architecture", "model");
  BenchResult result;
  result.serialized = serialized;
  for (Architecture a : architectures) {
    ExperimentConfig cfg = base;
    cfg.architecture = a;
    cfg.pipeline.deterministic = serialized;
    if (!serialized && cfg.threads < 2) cfg.threads = 2;
    const RunResult run = run_experiment(cfg, false);
    if (!run.report.error.empty()) {
      throw TrainingError(std::string(to_string(a)) + " run failed: " + run.report.error, run.report.error_subject);
    }
    result.dataset = run.dataset;
    BenchRow row;
    row.architecture = a;
    row.latency = run.report.latency;
    row.throughput_per_s = row.latency.mean_ms > 0 ? 1000.0 / row.latency.mean_ms : 0.0;
    row.final_kappa = run.report.kappa.final_kappa;
    row.parameters = run.parameters.all_trainable;
    result.rows.push_back(row);
  }
  if (result.rows.size() > 1) {
    std::vector<const BenchRow*> sorted;
    for (const auto& r : result.rows) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const BenchRow* a, const BenchRow* b) { return a->latency.mean_ms < b->latency.mean_ms; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      result.ordering += (i ? " < " : "") + std::string(to_string(sorted[i]->architecture));
    }
  }
  return result;
}

std::string bench_csv(const BenchResult& b) {
  std::string out = "architecture,instances,mean_ms,median_ms,p99_ms,throughput_per_s,final_kappa,parameters\n";
  for (const BenchRow& r : b.rows) {
    out += std::string(to_string(r.architecture)) + "," + std::to_string(r.latency.count) + "," +
           fixed(r.latency.mean_ms, 6) + "," + fixed(r.latency.median_ms, 6) + "," + fixed(r.latency.p99_ms, 6) + "," +
           fixed(r.throughput_per_s, 1) + "," + fixed(r.final_kappa, 4) + "," + std::to_string(r.parameters) + "\n";
  }
  return out;
}

std::string bench_text(const BenchResult& b) {
  std::ostringstream os;
  os << "Classification latency on " << b.dataset << " (" << (b.serialized ? "serialized" : "concurrent")
     << " pipeline)\n";
  os << "  " << pad("model", 7) << pad("mean ms", 11) << pad("median ms", 11) << pad("p99 ms", 11)
     << pad("inst/s", 11) << pad("kappa", 8) << "params\n";
  for (const BenchRow& r : b.rows) {
    os << "  " << pad(to_string(r.architecture), 7) << pad(fixed(r.latency.mean_ms, 4), 11)
       << pad(fixed(r.latency.median_ms, 4), 11) << pad(fixed(r.latency.p99_ms, 4), 11)
       << pad(fixed(r.throughput_per_s, 1), 11) << pad(fixed(r.final_kappa, 4), 8) << r.parameters << "\n";
  }
  if (!b.ordering.empty()) os << "  ordering: " << b.ordering << "\n";
  return os.str();
}

}  // namespace adls
