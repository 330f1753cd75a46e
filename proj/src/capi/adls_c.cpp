#include "adls/adls.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <variant>
#include <vector>

#include "adls/dataset.hpp"
#include "adls/error.hpp"
#include "adls/experiment.hpp"
#include "adls/model.hpp"
#include "adls/prequential.hpp"
#include "adls/snapshot.hpp"

struct adls_config {
  adls::ExperimentConfig value;
};

struct adls_run {
  adls::RunResult result;
  std::string summary;
};

struct adls_comparison {
  adls::Comparison value;
};

struct adls_bench {
  adls::BenchResult value;
};

struct adls_model {
  std::variant<std::unique_ptr<adls::Model<float>>, std::unique_ptr<adls::Model<double>>> model;
};

struct adls_prequential {
  adls::PrequentialState state;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_subject;

adls_status status_of(adls::ErrorKind kind) {
  switch (kind) {
    case adls::ErrorKind::config: return ADLS_ERR_CONFIG;
    case adls::ErrorKind::input: return ADLS_ERR_INPUT;
    case adls::ErrorKind::format: return ADLS_ERR_FORMAT;
    case adls::ErrorKind::training: return ADLS_ERR_TRAINING;
    case adls::ErrorKind::state: return ADLS_ERR_STATE;
    case adls::ErrorKind::io: return ADLS_ERR_IO;
  }
  return ADLS_ERR_INTERNAL;
}

adls_status fail(adls_status status, std::string message, std::string subject = {}) {
  g_last_error = std::move(message);
  g_last_subject = std::move(subject);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body>
adls_status guarded(Body&& body) {
  try {
    return body();
  } catch (const adls::Error& e) {
    return fail(status_of(e.kind()), e.what(), e.subject());
  } catch (const std::bad_alloc&) {
    return fail(ADLS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ADLS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ADLS_ERR_INTERNAL, "unknown error");
  }
}

adls_status copy_out(const std::string& s, char* buffer, size_t capacity, size_t* needed) {
  if (needed != nullptr) *needed = s.size() + 1;
  if (buffer == nullptr || capacity < s.size() + 1) {
    return fail(ADLS_ERR_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(s.size() + 1) + " bytes");
  }
  std::memcpy(buffer, s.c_str(), s.size() + 1);
  return ADLS_OK;
}

#define ADLS_REQUIRE(cond, what)                                        \
  do {                                                                  \
    if (!(cond)) return fail(ADLS_ERR_INVALID_ARGUMENT, what " is null"); \
  } while (0)

}  // namespace

extern "C" {

const char* adls_version(void) { return "1.0.0"; }

const char* adls_status_name(adls_status status) {
  switch (status) {
    case ADLS_OK: return "ok";
    case ADLS_ERR_CONFIG: return "config";
    case ADLS_ERR_INPUT: return "input";
    case ADLS_ERR_FORMAT: return "format";
    case ADLS_ERR_TRAINING: return "training";
    case ADLS_ERR_STATE: return "state";
    case ADLS_ERR_IO: return "io";
    case ADLS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case ADLS_ERR_BUFFER_TOO_SMALL: return "buffer_too_small";
    case ADLS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* adls_last_error(void) { return g_last_error.c_str(); }
const char* adls_last_error_subject(void) { return g_last_subject.c_str(); }

// ---- config ----

adls_status adls_config_create(adls_config** out) {
  ADLS_REQUIRE(out, "out");
  return guarded([&] {
    *out = new adls_config{};
    return ADLS_OK;
  });
}

void adls_config_destroy(adls_config* config) { delete config; }

adls_status adls_config_set(adls_config* config, const char* key, const char* value) {
  ADLS_REQUIRE(config, "config");
  ADLS_REQUIRE(key, "key");
  ADLS_REQUIRE(value, "value");
  return guarded([&] {
    adls::set_option(config->value, key, value);
    return ADLS_OK;
  });
}

adls_status adls_config_get(const adls_config* config, const char* key, char* buffer, size_t capacity,
                            size_t* needed) {
  ADLS_REQUIRE(config, "config");
  ADLS_REQUIRE(key, "key");
  return guarded([&] { return copy_out(adls::get_option(config->value, key), buffer, capacity, needed); });
}

adls_status adls_config_load_file(adls_config* config, const char* path) {
  ADLS_REQUIRE(config, "config");
  ADLS_REQUIRE(path, "path");
  return guarded([&] {
    adls::apply_config_file(config->value, path);
    return ADLS_OK;
  });
}

adls_status adls_config_apply_env(adls_config* config) {
  ADLS_REQUIRE(config, "config");
  return guarded([&] {
    adls::apply_environment(config->value);
    return ADLS_OK;
  });
}

adls_status adls_config_serialize(const adls_config* config, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(config, "config");
  return guarded([&] { return copy_out(adls::serialize(config->value), buffer, capacity, needed); });
}

size_t adls_config_key_count(void) { return adls::config_keys().size(); }

const char* adls_config_key(size_t index) {
  const auto& keys = adls::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

// ---- run ----

adls_status adls_run_create(const adls_config* config, adls_run** out) {
  ADLS_REQUIRE(config, "config");
  ADLS_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    auto run = std::make_unique<adls_run>();
    run->result = adls::run_experiment(config->value, true);
    run->summary = adls::summary_json(run->result, config->value);
    *out = run.release();
    return ADLS_OK;
  });
}

void adls_run_destroy(adls_run* run) { delete run; }

adls_status adls_run_status(const adls_run* run) {
  if (run == nullptr) return ADLS_ERR_INVALID_ARGUMENT;
  const auto& kind = run->result.report.error_kind;
  return kind ? status_of(*kind) : ADLS_OK;
}

const char* adls_run_error(const adls_run* run) { return run ? run->result.report.error.c_str() : ""; }
const char* adls_run_error_subject(const adls_run* run) { return run ? run->result.report.error_subject.c_str() : ""; }
double adls_run_final_kappa(const adls_run* run) { return run ? run->result.report.kappa.final_kappa : 0.0; }
double adls_run_mean_kappa(const adls_run* run) { return run ? run->result.report.kappa.mean_kappa : 0.0; }
double adls_run_mean_latency_ms(const adls_run* run) { return run ? run->result.report.latency.mean_ms : 0.0; }

uint64_t adls_run_prediction_count(const adls_run* run) {
  return run ? static_cast<uint64_t>(run->result.report.predictions.size()) : 0;
}

adls_status adls_run_summary_json(const adls_run* run, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(run, "run");
  return copy_out(run->summary, buffer, capacity, needed);
}

size_t adls_run_file_count(const adls_run* run) { return run ? run->result.files.size() : 0; }

const char* adls_run_file(const adls_run* run, size_t index) {
  if (run == nullptr || index >= run->result.files.size()) return nullptr;
  return run->result.files[index].c_str();
}

// ---- compare ----

adls_status adls_compare_files(const char* const* paths, size_t count, double alpha, adls_comparison** out) {
  ADLS_REQUIRE(out, "out");
  ADLS_REQUIRE(paths || count == 0, "paths");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> list;
    for (size_t i = 0; i < count; ++i) {
      if (paths[i] == nullptr) return fail(ADLS_ERR_INVALID_ARGUMENT, "path entry is null");
      list.emplace_back(paths[i]);
    }
    *out = new adls_comparison{adls::compare_files(list, alpha)};
    return ADLS_OK;
  });
}

void adls_comparison_destroy(adls_comparison* comparison) { delete comparison; }

size_t adls_comparison_model_count(const adls_comparison* c) { return c ? c->value.matrix.cols() : 0; }
size_t adls_comparison_dataset_count(const adls_comparison* c) { return c ? c->value.matrix.rows() : 0; }

const char* adls_comparison_model(const adls_comparison* c, size_t index) {
  if (c == nullptr || index >= c->value.matrix.cols()) return nullptr;
  return c->value.matrix.models[index].c_str();
}

double adls_comparison_rank(const adls_comparison* c, size_t index) {
  if (c == nullptr || index >= c->value.ranks.size()) return 0.0;
  return c->value.ranks[index];
}

double adls_comparison_friedman_statistic(const adls_comparison* c) { return c ? c->value.friedman.statistic : 0.0; }
double adls_comparison_friedman_p(const adls_comparison* c) { return c ? c->value.friedman.p_value : 1.0; }
const char* adls_comparison_method(const adls_comparison* c) { return c ? c->value.posthoc.method.c_str() : ""; }
size_t adls_comparison_pair_count(const adls_comparison* c) { return c ? c->value.posthoc.entries.size() : 0; }

adls_status adls_comparison_pair(const adls_comparison* c, size_t index, adls_pair_result* out) {
  ADLS_REQUIRE(c, "comparison");
  ADLS_REQUIRE(out, "out");
  if (index >= c->value.posthoc.entries.size()) return fail(ADLS_ERR_INVALID_ARGUMENT, "pair index out of range");
  const adls::PosthocEntry& e = c->value.posthoc.entries[index];
  *out = adls_pair_result{e.first, e.second, e.z, e.raw_p, e.adjusted_p, e.reject ? 1 : 0};
  return ADLS_OK;
}

adls_status adls_comparison_text(const adls_comparison* c, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(c, "comparison");
  return guarded([&] { return copy_out(adls::comparison_text(c->value), buffer, capacity, needed); });
}

adls_status adls_comparison_ranks_csv(const adls_comparison* c, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(c, "comparison");
  return guarded([&] { return copy_out(adls::ranks_csv(c->value), buffer, capacity, needed); });
}

adls_status adls_comparison_posthoc_csv(const adls_comparison* c, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(c, "comparison");
  return guarded([&] { return copy_out(adls::posthoc_csv(c->value), buffer, capacity, needed); });
}

// ---- bench ----

adls_status adls_bench_create(const adls_config* config, const char* const* architectures, size_t count,
                              int serialized, adls_bench** out) {
  ADLS_REQUIRE(config, "config");
  ADLS_REQUIRE(out, "out");
  ADLS_REQUIRE(architectures || count == 0, "architectures");
  *out = nullptr;
  return guarded([&] {
    std::vector<adls::Architecture> list;
    for (size_t i = 0; i < count; ++i) {
      if (architectures[i] == nullptr) return fail(ADLS_ERR_INVALID_ARGUMENT, "architecture entry is null");
      list.push_back(adls::parse_architecture(architectures[i]));
    }
    *out = new adls_bench{adls::bench(config->value, list, serialized != 0)};
    return ADLS_OK;
  });
}

void adls_bench_destroy(adls_bench* bench) { delete bench; }
size_t adls_bench_row_count(const adls_bench* b) { return b ? b->value.rows.size() : 0; }
const char* adls_bench_ordering(const adls_bench* b) { return b ? b->value.ordering.c_str() : ""; }

adls_status adls_bench_row_at(const adls_bench* b, size_t index, adls_bench_row* out) {
  ADLS_REQUIRE(b, "bench");
  ADLS_REQUIRE(out, "out");
  if (index >= b->value.rows.size()) return fail(ADLS_ERR_INVALID_ARGUMENT, "row index out of range");
  const adls::BenchRow& r = b->value.rows[index];
  *out = adls_bench_row{adls::to_string(r.architecture), r.latency.count,      r.latency.mean_ms,
                        r.latency.median_ms,             r.latency.p99_ms,     r.throughput_per_s,
                        r.final_kappa,                   r.parameters};
  return ADLS_OK;
}

adls_status adls_bench_csv(const adls_bench* b, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(b, "bench");
  return guarded([&] { return copy_out(adls::bench_csv(b->value), buffer, capacity, needed); });
}

adls_status adls_bench_text(const adls_bench* b, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(b, "bench");
  return guarded([&] { return copy_out(adls::bench_text(b->value), buffer, capacity, needed); });
}

// ---- models ----

adls_status adls_model_create(const char* architecture, size_t features, size_t classes, int precision_bits,
                              uint64_t seed, adls_model** out) {
  ADLS_REQUIRE(architecture, "architecture");
  ADLS_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    adls::ModelSpec spec;
    spec.architecture = adls::parse_architecture(architecture);
    spec.features = features;
    spec.classes = classes;
    auto m = std::make_unique<adls_model>();
    if (precision_bits == 32) {
      spec.precision = adls::Precision::f32;
      m->model = std::make_unique<adls::Model<float>>(spec, seed);
    } else if (precision_bits == 64) {
      spec.precision = adls::Precision::f64;
      m->model = std::make_unique<adls::Model<double>>(spec, seed);
    } else {
      return fail(ADLS_ERR_CONFIG, "precision must be 32 or 64 bits", "precision");
    }
    *out = m.release();
    return ADLS_OK;
  });
}

void adls_model_destroy(adls_model* model) { delete model; }

adls_status adls_model_predict(adls_model* model, const double* series, size_t length, size_t* predicted) {
  ADLS_REQUIRE(model, "model");
  ADLS_REQUIRE(series, "series");
  ADLS_REQUIRE(predicted, "predicted");
  return guarded([&] {
    *predicted = std::visit([&](auto& m) { return m->predict(std::span<const double>(series, length)); }, model->model);
    return ADLS_OK;
  });
}

adls_status adls_model_probabilities(adls_model* model, const double* series, size_t length, double* probabilities,
                                     size_t classes) {
  ADLS_REQUIRE(model, "model");
  ADLS_REQUIRE(series, "series");
  ADLS_REQUIRE(probabilities, "probabilities");
  return guarded([&] {
    return std::visit(
        [&](auto& m) {
          if (classes != m->spec().classes) return fail(ADLS_ERR_INVALID_ARGUMENT, "probability buffer has wrong length");
          const auto p = m->forward_classify(std::span<const double>(series, length));
          for (size_t i = 0; i < classes; ++i) probabilities[i] = static_cast<double>(p[i]);
          return ADLS_OK;
        },
        model->model);
  });
}

adls_status adls_model_parameter_count(const adls_model* model, int weights_only, uint64_t* out) {
  ADLS_REQUIRE(model, "model");
  ADLS_REQUIRE(out, "out");
  const auto convention = weights_only ? adls::CountConvention::weights_only : adls::CountConvention::all_trainable;
  *out = std::visit([&](const auto& m) { return static_cast<uint64_t>(m->parameter_count(convention)); }, model->model);
  return ADLS_OK;
}

uint64_t adls_model_published_formula(const adls_model* model) {
  if (model == nullptr) return 0;
  return std::visit([](const auto& m) { return adls::published_parameter_formula(m->spec()); }, model->model);
}

adls_status adls_model_fingerprint(const adls_model* model, char* buffer, size_t capacity, size_t* needed) {
  ADLS_REQUIRE(model, "model");
  return guarded([&] {
    return copy_out(std::visit([](const auto& m) { return m->fingerprint(); }, model->model), buffer, capacity, needed);
  });
}

adls_status adls_model_save_snapshot(adls_model* model, const char* path, uint64_t version) {
  ADLS_REQUIRE(model, "model");
  ADLS_REQUIRE(path, "path");
  return guarded([&] {
    std::visit([&](auto& m) { adls::write_snapshot_file(path, *m, version); }, model->model);
    return ADLS_OK;
  });
}

adls_status adls_model_load_snapshot(adls_model* model, const char* path, uint64_t* version) {
  ADLS_REQUIRE(model, "model");
  ADLS_REQUIRE(path, "path");
  return guarded([&] {
    const adls::SnapshotFile file = adls::read_snapshot_file(path);
    std::visit([&](auto& m) { adls::load_snapshot(file, *m); }, model->model);
    if (version != nullptr) *version = file.version;
    return ADLS_OK;
  });
}

// ---- prequential ----

adls_status adls_prequential_create(size_t classes, double alpha, adls_prequential** out) {
  ADLS_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    *out = new adls_prequential{adls::PrequentialState(classes, alpha)};
    return ADLS_OK;
  });
}

void adls_prequential_destroy(adls_prequential* state) { delete state; }

adls_status adls_prequential_update(adls_prequential* state, size_t true_label, size_t predicted_label) {
  ADLS_REQUIRE(state, "state");
  return guarded([&] {
    state->state.update(true_label, predicted_label);
    return ADLS_OK;
  });
}

adls_status adls_prequential_accuracy(const adls_prequential* state, double* out) {
  ADLS_REQUIRE(state, "state");
  ADLS_REQUIRE(out, "out");
  return guarded([&] {
    *out = state->state.accuracy();
    return ADLS_OK;
  });
}

adls_status adls_prequential_kappa(const adls_prequential* state, double* out) {
  ADLS_REQUIRE(state, "state");
  ADLS_REQUIRE(out, "out");
  return guarded([&] {
    *out = state->state.kappa();
    return ADLS_OK;
  });
}

// ---- data ----

adls_status adls_write_synthetic(const char* path, size_t instances, size_t length, size_t classes, double snr_db,
                                 uint64_t seed) {
  ADLS_REQUIRE(path, "path");
  return guarded([&] {
    adls::SyntheticConfig cfg;
    cfg.instances = instances;
    cfg.length = length;
    cfg.classes = classes;
    cfg.snr_db = snr_db;
    cfg.seed = seed;
    adls::write_ucr(path, adls::synthetic_sinusoids(cfg));
    return ADLS_OK;
  });
}

}  // extern "C"
