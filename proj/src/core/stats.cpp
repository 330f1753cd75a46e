#include "adls/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "adls/error.hpp"
#include "adls/text.hpp"

namespace adls {

ResultMatrix parse_result_matrix_csv(std::istream& in, const std::string& origin) {
  ResultMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw InputError("result matrix " + origin + " is empty", origin);
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 2) throw InputError("result matrix header needs a dataset column and models", origin);
  for (std::size_t i = 1; i < header.size(); ++i) m.models.push_back(text::trim(header[i]));

  std::vector<std::string> missing;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = text::trim(line);
    if (line.empty()) continue;
    auto fields = text::split(line, ',');
    const std::string name = text::trim(fields[0]);
    m.datasets.push_back(name);
    for (std::size_t j = 0; j < m.models.size(); ++j) {
      double v = 0.0;
      const bool present = j + 1 < fields.size() && text::parse_double(text::trim(fields[j + 1]), v);
      if (!present) {
        missing.push_back(name + "/" + m.models[j] + " (line " + std::to_string(line_no) + ")");
        v = std::nan("");
      }
      m.scores.push_back(v);
    }
  }
  if (!missing.empty()) {
    std::string msg = "result matrix " + origin + " has missing cells:";
    for (const auto& cell : missing) msg += " " + cell;
    throw InputError(msg, origin);
  }
  validate(m);
  return m;
}

ResultMatrix read_result_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open result matrix " + path, path);
  return parse_result_matrix_csv(in, path);
}

void validate(const ResultMatrix& m) {
  if (m.cols() < 2) throw InputError("need at least two models to compare");
  if (m.rows() < 2) throw InputError("need at least two datasets to compare");
  if (m.scores.size() != m.rows() * m.cols()) throw InputError("result matrix has missing cells");
  for (double v : m.scores) {
    if (!std::isfinite(v)) throw InputError("result matrix has non-finite cells");
  }
}

std::vector<double> rank_row(std::span<const double> scores) {
  const std::size_t k = scores.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(k);
  for (std::size_t i = 0; i < k;) {
    std::size_t j = i;
    while (j + 1 < k && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> friedman_ranks(const ResultMatrix& m) {
  validate(m);
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto ranks = rank_row(std::span<const double>(m.scores).subspan(r * m.cols(), m.cols()));
    for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += ranks[j];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

FriedmanResult friedman_test(const ResultMatrix& m) {
  validate(m);
  const auto n = static_cast<double>(m.rows());
  const auto k = static_cast<double>(m.cols());
  const auto ranks = friedman_ranks(m);

  double ties = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.scores.begin() + static_cast<std::ptrdiff_t>(r * m.cols()),
                            m.scores.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols()));
    std::sort(row.begin(), row.end());
    for (std::size_t i = 0; i < row.size();) {
      std::size_t j = i;
      while (j + 1 < row.size() && row[j + 1] == row[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      ties += t * t * t - t;
      i = j + 1;
    }
  }

  FriedmanResult res;
  res.df = m.cols() - 1;
  res.tie_correction = 1.0 - ties / (n * (k * k * k - k));
  double sum_sq = 0.0;
  for (double r : ranks) sum_sq += r * r;
  const double raw = 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0);
  if (res.tie_correction <= 0.0 || raw <= 1e-12) {
    res.statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.statistic = raw / res.tie_correction;
  res.p_value = boost::math::gamma_q(static_cast<double>(res.df) / 2.0, res.statistic / 2.0);
  return res;
}

std::vector<PairwiseZ> pairwise_z(std::span<const double> average_ranks, std::size_t datasets) {
  const std::size_t k = average_ranks.size();
  if (k < 2 || datasets < 1) throw InputError("pairwise comparison needs k >= 2 and n >= 1");
  const double se = std::sqrt(static_cast<double>(k * (k + 1)) / (6.0 * static_cast<double>(datasets)));
  std::vector<PairwiseZ> out;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) out.push_back({i, j, (average_ranks[i] - average_ranks[j]) / se});
  }
  return out;
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t k) {
  if (i > j) std::swap(i, j);
  return i * k - i * (i + 1) / 2 + (j - i - 1);
}

std::vector<std::uint64_t> exhaustive_sets(std::size_t k) {
  if (k < 2 || k > kMaxBergmannHommelModels) {
    throw InputError("exhaustive sets are enumerated for 2 <= k <= " + std::to_string(kMaxBergmannHommelModels));
  }
  // Restricted growth strings enumerate each set partition exactly once.
  std::vector<std::uint64_t> sets;
  std::vector<std::size_t> block(k, 0), max_prefix(k, 0);
  while (true) {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        if (block[i] == block[j]) mask |= std::uint64_t{1} << pair_index(i, j, k);
      }
    }
    if (mask) sets.push_back(mask);

    std::size_t pos = k - 1;
    while (pos > 0 && block[pos] == max_prefix[pos - 1] + 1) --pos;
    if (pos == 0) break;
    ++block[pos];
    max_prefix[pos] = std::max(max_prefix[pos - 1], block[pos]);
    for (std::size_t t = pos + 1; t < k; ++t) {
      block[t] = 0;
      max_prefix[t] = max_prefix[pos];
    }
  }
  return sets;
}

namespace {

PosthocReport raw_report(std::span<const PairwiseZ> pairs, double alpha, std::string method) {
  PosthocReport rep;
  rep.method = std::move(method);
  rep.alpha = alpha;
  for (const PairwiseZ& p : pairs) {
    PosthocEntry e;
    e.first = p.first;
    e.second = p.second;
    e.z = p.z;
    e.raw_p = two_sided_normal_p(p.z);
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace

PosthocReport bergmann_hommel(std::span<const PairwiseZ> pairs, std::size_t k, double alpha) {
  if (k > kMaxBergmannHommelModels) {
    throw InputError("Bergmann-Hommel is limited to " + std::to_string(kMaxBergmannHommelModels) +
                     " models; got " + std::to_string(k));
  }
  const std::size_t m = k * (k - 1) / 2;
  if (pairs.size() != m) {
    throw InputError("Bergmann-Hommel needs all " + std::to_string(m) + " pairs, got " + std::to_string(pairs.size()));
  }
  PosthocReport rep = raw_report(pairs, alpha, "bergmann-hommel");

  std::vector<double> p_by_index(m, 1.0);
  std::vector<bool> seen(m, false);
  for (const PosthocEntry& e : rep.entries) {
    const std::size_t idx = pair_index(e.first, e.second, k);
    if (e.first == e.second || e.second >= k || seen[idx]) throw InputError("invalid or duplicate pair in post-hoc input");
    seen[idx] = true;
    p_by_index[idx] = e.raw_p;
  }

  std::vector<double> adjusted(m, 0.0);
  for (std::uint64_t set : exhaustive_sets(k)) {
    double min_p = 1.0;
    std::size_t size = 0;
    for (std::size_t h = 0; h < m; ++h) {
      if (set >> h & 1U) {
        min_p = std::min(min_p, p_by_index[h]);
        ++size;
      }
    }
    const double value = static_cast<double>(size) * min_p;
    for (std::size_t h = 0; h < m; ++h) {
      if (set >> h & 1U) adjusted[h] = std::max(adjusted[h], value);
    }
  }
  for (PosthocEntry& e : rep.entries) {
    e.adjusted_p = std::min(1.0, adjusted[pair_index(e.first, e.second, k)]);
    e.reject = e.adjusted_p <= alpha;
  }
  return rep;
}

PosthocReport holm(std::span<const PairwiseZ> pairs, double alpha) {
  PosthocReport rep = raw_report(pairs, alpha, "holm");
  const std::size_t m = rep.entries.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rep.entries[a].raw_p < rep.entries[b].raw_p; });
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    PosthocEntry& e = rep.entries[order[rank]];
    running = std::max(running, std::min(1.0, static_cast<double>(m - rank) * e.raw_p));
    e.adjusted_p = running;
    e.reject = e.adjusted_p <= alpha;
  }
  return rep;
}

}  // namespace adls
