#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace adls {

// datasets x models score table; higher scores are better.
struct ResultMatrix {
  std::vector<std::string> models;
  std::vector<std::string> datasets;
  std::vector<double> scores;  // row-major [dataset x model]

  std::size_t rows() const noexcept { return datasets.size(); }
  std::size_t cols() const noexcept { return models.size(); }
  double at(std::size_t row, std::size_t col) const { return scores[row * models.size() + col]; }
};

// Header "dataset,<model>,...", one row per dataset. Empty or non-numeric
// cells are reported together in a single InputError.
ResultMatrix parse_result_matrix_csv(std::istream& in, const std::string& origin = "<stream>");
ResultMatrix read_result_matrix_csv(const std::string& path);

// Throws InputError unless k >= 2, n >= 2 and every cell is finite.
void validate(const ResultMatrix& m);

// Rank 1 is the best score; tied scores share the mean of their ranks.
std::vector<double> rank_row(std::span<const double> scores);
std::vector<double> friedman_ranks(const ResultMatrix& m);

struct FriedmanResult {
  double statistic = 0.0;   // tie-corrected chi-square
  double p_value = 1.0;
  std::size_t df = 0;
  double tie_correction = 1.0;
};

FriedmanResult friedman_test(const ResultMatrix& m);

// z = (R_first - R_second) / sqrt(k(k+1) / (6n)) for every pair first < second.
struct PairwiseZ {
  std::size_t first = 0;
  std::size_t second = 0;
  double z = 0.0;
};

std::vector<PairwiseZ> pairwise_z(std::span<const double> average_ranks, std::size_t datasets);

double two_sided_normal_p(double z);

struct PosthocEntry {
  std::size_t first = 0;
  std::size_t second = 0;
  double z = 0.0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool reject = false;
};

struct PosthocReport {
  std::string method;
  double alpha = 0.05;
  std::vector<PosthocEntry> entries;  // same order as the input pairs
};

constexpr std::size_t kMaxBergmannHommelModels = 9;

// Position of pair (i, j), i < j, in the lexicographic pair order.
std::size_t pair_index(std::size_t i, std::size_t j, std::size_t k);

// Every exhaustive set of pairwise-equality hypotheses for k models, as a
// bitmask over pair_index. One set per partition of the models into groups
// of equal performance (the all-singleton partition is left out).
std::vector<std::uint64_t> exhaustive_sets(std::size_t k);

// Adjusted p of H = min(1, max over exhaustive sets I containing H of
// |I| * min_{J in I} p_J). Refuses k > kMaxBergmannHommelModels.
PosthocReport bergmann_hommel(std::span<const PairwiseZ> pairs, std::size_t k, double alpha = 0.05);

// Holm step-down on the same family.
PosthocReport holm(std::span<const PairwiseZ> pairs, double alpha = 0.05);

}  // namespace adls
