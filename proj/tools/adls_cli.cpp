#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adls/adls.h"

namespace {

int exit_code(adls_status status) {
  switch (status) {
    case ADLS_OK: return 0;
    case ADLS_ERR_CONFIG:
    case ADLS_ERR_INPUT:
    case ADLS_ERR_IO:
    case ADLS_ERR_INVALID_ARGUMENT: return 2;
    case ADLS_ERR_FORMAT: return 3;
    case ADLS_ERR_TRAINING: return 4;
    default: return 1;
  }
}

int report_error(adls_status status, const std::string& message, const std::string& subject) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", adls_status_name(status)}, {"message", message}, {"subject", subject}};
  if (!subject.empty()) j["error"]["path"] = subject;
  std::cerr << j.dump() << "\n";
  return exit_code(status);
}

int report_last_error(adls_status status) { return report_error(status, adls_last_error(), adls_last_error_subject()); }

// Thrown out of a subcommand to unwind with a status.
struct Failure {
  adls_status status;
};

void check(adls_status status) {
  if (status != ADLS_OK) throw Failure{status};
}

template <typename Getter>
std::string fetch(Getter&& get) {
  size_t needed = 0;
  get(nullptr, 0, &needed);
  std::string out(needed, '\0');
  check(get(out.data(), out.size(), &needed));
  out.resize(needed - 1);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

using ConfigPtr = std::unique_ptr<adls_config, decltype(&adls_config_destroy)>;

// Options shared by run and bench: a config file, one flag per config key,
// and repeated --set key=value.
struct ConfigOptions {
  std::string file;
  std::vector<std::pair<std::string, std::string>> values;  // key, value in key order
  std::vector<std::string> sets;
  bool deterministic = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "Config file of key = value lines");
    app->add_option("--set", sets, "Override any key: --set key=value (repeatable)");
    app->add_flag("--deterministic", deterministic, "Serialize training and prediction (byte-reproducible output)");
    values.reserve(adls_config_key_count());
    for (size_t i = 0; i < adls_config_key_count(); ++i) {
      const std::string key = adls_config_key(i);
      if (key == "deterministic") continue;
      values.emplace_back(key, std::string());
      std::string names = "--" + key;
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names += ",--" + dashed;
      app->add_option(names, values.back().second, "Config key '" + key + "'");
    }
  }

  // defaults < config file < environment < command line
  ConfigPtr build() const {
    adls_config* raw = nullptr;
    check(adls_config_create(&raw));
    ConfigPtr config(raw, adls_config_destroy);
    if (!file.empty()) check(adls_config_load_file(config.get(), file.c_str()));
    check(adls_config_apply_env(config.get()));
    for (const auto& [key, value] : values) {
      if (!value.empty()) check(adls_config_set(config.get(), key.c_str(), value.c_str()));
    }
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
      }
      check(adls_config_set(config.get(), s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
    }
    if (deterministic) check(adls_config_set(config.get(), "deterministic", "true"));
    return config;
  }
};

int cmd_run(const ConfigOptions& options) {
  ConfigPtr config = options.build();
  adls_run* raw = nullptr;
  check(adls_run_create(config.get(), &raw));
  std::unique_ptr<adls_run, decltype(&adls_run_destroy)> run(raw, adls_run_destroy);

  const auto summary = nlohmann::json::parse(
      fetch([&](char* b, size_t c, size_t* n) { return adls_run_summary_json(run.get(), b, c, n); }));
  std::printf("%s on %s (f=%zu, c=%zu): %llu predictions, final kappa %.4f, mean kappa %.4f, mean latency %.4f ms\n",
              summary["architecture"].get<std::string>().c_str(), summary["dataset"].get<std::string>().c_str(),
              summary["features"].get<size_t>(), summary["classes"].get<size_t>(),
              static_cast<unsigned long long>(adls_run_prediction_count(run.get())), adls_run_final_kappa(run.get()),
              adls_run_mean_kappa(run.get()), adls_run_mean_latency_ms(run.get()));
  for (size_t i = 0; i < adls_run_file_count(run.get()); ++i) std::printf("  wrote %s\n", adls_run_file(run.get(), i));

  const adls_status status = adls_run_status(run.get());
  if (status != ADLS_OK) return report_error(status, adls_run_error(run.get()), adls_run_error_subject(run.get()));
  return 0;
}

int cmd_compare(const std::vector<std::string>& inputs, double alpha, const std::string& output_dir) {
  std::vector<const char*> paths;
  for (const auto& p : inputs) paths.push_back(p.c_str());
  adls_comparison* raw = nullptr;
  check(adls_compare_files(paths.data(), paths.size(), alpha, &raw));
  std::unique_ptr<adls_comparison, decltype(&adls_comparison_destroy)> cmp(raw, adls_comparison_destroy);

  const std::string text = fetch([&](char* b, size_t c, size_t* n) { return adls_comparison_text(cmp.get(), b, c, n); });
  std::fputs(text.c_str(), stdout);
  if (!output_dir.empty()) {
    const std::filesystem::path dir(output_dir);
    write_file((dir / "ranks.csv").string(),
               fetch([&](char* b, size_t c, size_t* n) { return adls_comparison_ranks_csv(cmp.get(), b, c, n); }));
    write_file((dir / "posthoc.csv").string(),
               fetch([&](char* b, size_t c, size_t* n) { return adls_comparison_posthoc_csv(cmp.get(), b, c, n); }));
    write_file((dir / "comparison.txt").string(), text);
  }
  return 0;
}

int cmd_bench(const ConfigOptions& options, const std::vector<std::string>& models, bool concurrent) {
  ConfigPtr config = options.build();
  std::vector<const char*> names;
  for (const auto& m : models) names.push_back(m.c_str());
  adls_bench* raw = nullptr;
  check(adls_bench_create(config.get(), names.data(), names.size(), concurrent ? 0 : 1, &raw));
  std::unique_ptr<adls_bench, decltype(&adls_bench_destroy)> bench(raw, adls_bench_destroy);

  std::fputs(fetch([&](char* b, size_t c, size_t* n) { return adls_bench_text(bench.get(), b, c, n); }).c_str(), stdout);
  const std::string dir = fetch([&](char* b, size_t c, size_t* n) { return adls_config_get(config.get(), "output_dir", b, c, n); });
  const std::string path = (std::filesystem::path(dir) / "bench.csv").string();
  write_file(path, fetch([&](char* b, size_t c, size_t* n) { return adls_bench_csv(bench.get(), b, c, n); }));
  std::printf("  wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming time-series classification with a concurrent train/predict pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(adls_version()));

  ConfigOptions run_options;
  CLI::App* run = app.add_subcommand("run", "Stream a dataset through one model and write predictions and a summary");
  run_options.attach(run);

  std::vector<std::string> compare_inputs;
  double alpha = 0.05;
  std::string compare_dir;
  CLI::App* compare = app.add_subcommand("compare", "Friedman ranking and Bergmann-Hommel post-hoc over results");
  compare->add_option("inputs", compare_inputs, "A result-matrix CSV or several summary.json files")->required();
  compare->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  compare->add_option("-o,--output-dir", compare_dir, "Also write ranks.csv, posthoc.csv and comparison.txt here");

  ConfigOptions bench_options;
  std::vector<std::string> bench_models{"MLP", "CNN", "LSTM", "TCN"};
  bool concurrent = false;
  CLI::App* bench = app.add_subcommand("bench", "Per-instance classification latency of several architectures");
  bench_options.attach(bench);
  bench->add_option("--models", bench_models, "Architectures to time")->delimiter(',');
  bench->add_flag("--concurrent", concurrent, "Time inside the concurrent pipeline instead of the serialized one");

  std::string synth_path;
  size_t synth_instances = 2000, synth_length = 64, synth_classes = 2;
  double synth_snr = 10.0;
  uint64_t synth_seed = 1;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic sinusoid dataset in UCR format");
  synth->add_option("-o,--output", synth_path, "Output file")->required();
  synth->add_option("--instances", synth_instances);
  synth->add_option("--length", synth_length);
  synth->add_option("--classes", synth_classes);
  synth->add_option("--snr-db", synth_snr);
  synth->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_options);
    if (*compare) return cmd_compare(compare_inputs, alpha, compare_dir);
    if (*bench) return cmd_bench(bench_options, bench_models, concurrent);
    if (*synth) {
      check(adls_write_synthetic(synth_path.c_str(), synth_instances, synth_length, synth_classes, synth_snr, synth_seed));
      std::printf("wrote %s\n", synth_path.c_str());
      return 0;
    }
  } catch (const Failure& f) {
    return report_last_error(f.status);
  } catch (const CLI::ValidationError& e) {
    return report_error(ADLS_ERR_CONFIG, e.what(), "");
  } catch (const std::exception& e) {
    return report_error(ADLS_ERR_IO, e.what(), "");
  }
  return 1;
}
