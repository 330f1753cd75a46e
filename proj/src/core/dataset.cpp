#include "adls/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "adls/error.hpp"
#include "adls/kernels.hpp"
#include "adls/text.hpp"

namespace adls {

namespace {

struct RawRows {
  std::vector<double> labels;
  std::vector<std::vector<double>> series;
};

enum class Delimiter { tab, comma, whitespace };

Delimiter detect_delimiter(const std::string& line) {
  if (line.find('\t') != std::string::npos) return Delimiter::tab;
  if (line.find(',') != std::string::npos) return Delimiter::comma;
  return Delimiter::whitespace;
}

std::vector<std::string> fields_of(const std::string& line, Delimiter d) {
  switch (d) {
    case Delimiter::tab: return text::split(line, '\t');
    case Delimiter::comma: return text::split(line, ',');
    case Delimiter::whitespace: return text::split_whitespace(line);
  }
  return {};
}

void parse_into(std::istream& in, const std::string& origin, RawRows& rows, std::size_t& length) {
  std::string line;
  std::size_t line_no = 0;
  bool have_delim = false;
  Delimiter delim = Delimiter::comma;
  while (std::getline(in, line)) {
    ++line_no;
    line = text::trim(line);
    if (line.empty()) continue;
    if (!have_delim) {
      delim = detect_delimiter(line);
      have_delim = true;
    }
    const auto fields = fields_of(line, delim);
    if (fields.size() < 2) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": expected a label and at least one value", origin);
    }
    double label = 0.0;
    if (!text::parse_double(text::trim(fields[0]), label)) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": non-numeric label '" + fields[0] + "'", origin);
    }
    std::vector<double> values(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!text::parse_double(text::trim(fields[i]), values[i - 1])) {
        throw FormatError(origin + ":" + std::to_string(line_no) + ": non-numeric value '" + fields[i] +
                              "' in column " + std::to_string(i + 1),
                          origin);
      }
    }
    if (length == 0) length = values.size();
    if (values.size() != length) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": series has " + std::to_string(values.size()) +
                            " values, expected " + std::to_string(length),
                        origin);
    }
    rows.labels.push_back(label);
    rows.series.push_back(std::move(values));
  }
}

Dataset finish(RawRows rows, std::size_t length, std::string name, const std::string& origin) {
  if (rows.series.empty()) throw FormatError(origin + ": no data rows", origin);
  Dataset ds;
  ds.name = std::move(name);
  ds.length = length;
  ds.original_labels = rows.labels;
  std::sort(ds.original_labels.begin(), ds.original_labels.end());
  ds.original_labels.erase(std::unique(ds.original_labels.begin(), ds.original_labels.end()), ds.original_labels.end());
  ds.classes = ds.original_labels.size();
  std::map<double, std::size_t> remap;
  for (std::size_t i = 0; i < ds.original_labels.size(); ++i) remap[ds.original_labels[i]] = i;
  ds.labels.reserve(rows.labels.size());
  for (double l : rows.labels) ds.labels.push_back(remap.at(l));
  ds.series = std::move(rows.series);
  return ds;
}

std::string dataset_name(const std::string& path) {
  std::string stem = std::filesystem::path(path).stem().string();
  for (const char* suffix : {"_TRAIN", "_TEST"}) {
    const std::string s(suffix);
    if (stem.size() > s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0) {
      stem.resize(stem.size() - s.size());
    }
  }
  return stem;
}

}  // namespace

Dataset parse_ucr(std::istream& in, const std::string& origin) {
  RawRows rows;
  std::size_t length = 0;
  parse_into(in, origin, rows, length);
  return finish(std::move(rows), length, origin, origin);
}

Dataset load_ucr(const std::string& path) { return load_ucr(std::span<const std::string>(&path, 1)); }

Dataset load_ucr(std::span<const std::string> paths) {
  if (paths.empty()) throw InputError("no dataset path given");
  RawRows rows;
  std::size_t length = 0;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    if (!in) throw InputError("dataset not found: " + path, path);
    parse_into(in, path, rows, length);
  }
  return finish(std::move(rows), length, dataset_name(paths.front()), paths.front());
}

void write_ucr(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path, path);
  out << std::setprecision(17);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double label = dataset.original_labels.empty() ? static_cast<double>(dataset.labels[i])
                                                         : dataset.original_labels[dataset.labels[i]];
    out << label;
    for (double v : dataset.series[i]) out << '\t' << v;
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path, path);
}

const char* to_string(Normalization n) { return n == Normalization::none ? "none" : "per_series_z"; }

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::none;
  if (name == "per_series_z" || name == "z") return Normalization::per_series_z;
  throw ConfigError("unknown normalization '" + name + "' (expected none or per_series_z)", name);
}

Dataset normalize(Dataset dataset, Normalization mode) {
  if (mode == Normalization::none) return dataset;
  for (auto& s : dataset.series) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.size()));
    for (double& v : s) v = sd < 1e-12 ? 0.0 : (v - mean) / sd;
  }
  return dataset;
}

Dataset synthetic_sinusoids(const SyntheticConfig& config) {
  if (config.instances < 1 || config.length < 1 || config.classes < 2) {
    throw ConfigError("synthetic stream needs instances >= 1, length >= 1, classes >= 2");
  }
  std::mt19937_64 rng(config.seed);
  // Unit-amplitude sine has power 1/2.
  const double noise_sd = std::sqrt(0.5 / std::pow(10.0, config.snr_db / 10.0));
  Dataset ds;
  ds.name = "synthetic_sinusoids";
  ds.length = config.length;
  ds.classes = config.classes;
  for (std::size_t j = 0; j < config.classes; ++j) ds.original_labels.push_back(static_cast<double>(j));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < config.instances; ++i) {
    const std::size_t label = static_cast<std::size_t>(rng() % config.classes);
    const double cycles = config.base_cycles * static_cast<double>(label + 1);
    const double phase = two_pi * kernels::uniform01(rng);
    std::vector<double> s(config.length);
    for (std::size_t t = 0; t < config.length; ++t) {
      // Box-Muller keeps the noise reproducible across standard libraries.
      const double u1 = 1.0 - kernels::uniform01(rng);
      const double u2 = kernels::uniform01(rng);
      const double gauss = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
      s[t] = std::sin(two_pi * cycles * static_cast<double>(t) / static_cast<double>(config.length) + phase) +
             noise_sd * gauss;
    }
    ds.series.push_back(std::move(s));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace adls
