#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace adls {

// A univariate classification dataset with densely remapped labels.
struct Dataset {
  std::string name;
  std::vector<std::vector<double>> series;
  std::vector<std::size_t> labels;     // in [0, classes)
  std::vector<double> original_labels; // original_labels[class index] = label as read
  std::size_t length = 0;              // f
  std::size_t classes = 0;             // c

  std::size_t size() const noexcept { return series.size(); }
};

// UCR text format: one series per line, label first. The delimiter (tab,
// comma, or runs of spaces) is detected from the first non-empty line of each
// file. Several files (e.g. a TRAIN/TEST pair) are concatenated before labels
// are remapped to 0..c-1 in ascending order of the original values.
Dataset load_ucr(const std::string& path);
Dataset load_ucr(std::span<const std::string> paths);
Dataset parse_ucr(std::istream& in, const std::string& origin);

void write_ucr(const std::string& path, const Dataset& dataset);

enum class Normalization { none, per_series_z };

const char* to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

// per_series_z: subtract the mean and divide by the population standard
// deviation; a series with std < 1e-12 becomes all zeros.
Dataset normalize(Dataset dataset, Normalization mode);

// Noisy sinusoids whose frequency depends on the class: class j completes
// base_cycles * (j + 1) periods per series, with a random phase per instance
// and white Gaussian noise at the given signal-to-noise ratio.
struct SyntheticConfig {
  std::size_t instances = 2000;
  std::size_t length = 64;
  std::size_t classes = 2;
  double snr_db = 10.0;
  double base_cycles = 2.0;
  std::uint64_t seed = 1;
};

Dataset synthetic_sinusoids(const SyntheticConfig& config);

}  // namespace adls
