#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adls/error.hpp"
#include "adls/stats.hpp"
#include "doctest.h"

namespace {

std::string fixture_path() { return std::string(ADLS_SOURCE_DIR) + "/data/dl_stream_kappa.csv"; }

adls::ResultMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t k, int levels) {
  adls::ResultMatrix m;
  for (std::size_t j = 0; j < k; ++j) m.models.push_back("m" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    m.datasets.push_back("d" + std::to_string(i));
    for (std::size_t j = 0; j < k; ++j) m.scores.push_back(static_cast<double>(rng() % levels) + 0.1 * j * (i % 2));
  }
  return m;
}

// Tie-corrected Friedman statistic in its general form:
// (k-1) sum_j (R_j - n(k+1)/2)^2 / (sum_ij r_ij^2 - n k (k+1)^2 / 4)
double friedman_oracle(const adls::ResultMatrix& m) {
  const double n = static_cast<double>(m.rows()), k = static_cast<double>(m.cols());
  std::vector<double> sums(m.cols(), 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      // rank by brute force: 1 + #better + 0.5 * #tied others
      double r = 1.0;
      for (std::size_t o = 0; o < m.cols(); ++o) {
        if (o == j) continue;
        if (m.at(i, o) > m.at(i, j)) r += 1.0;
        else if (m.at(i, o) == m.at(i, j)) r += 0.5;
      }
      sums[j] += r;
      sq += r * r;
    }
  }
  double num = 0.0;
  for (double s : sums) num += (s - n * (k + 1) / 2) * (s - n * (k + 1) / 2);
  return (k - 1) * num / (sq - n * k * (k + 1) * (k + 1) / 4);
}

}  // namespace

TEST_CASE("rank_row gives tied scores the mean rank") {
  const std::vector<double> s{0.9, 0.5, 0.9, 0.1};
  const auto r = adls::rank_row(s);
  CHECK(r == std::vector<double>{1.5, 3.0, 1.5, 4.0});
}

TEST_CASE("ranks sum to k(k+1)/2 and are shift invariant") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(6);
    for (double& v : s) v = static_cast<double>(rng() % 4);
    auto r = adls::rank_row(s);
    double sum = 0;
    for (double v : r) sum += v;
    CHECK(sum == doctest::Approx(21.0));
    for (double& v : s) v += 3.25;
    CHECK(adls::rank_row(s) == r);
  }
}

TEST_CASE("friedman statistic matches the general tie-corrected form") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 40; ++t) {
    const auto m = random_matrix(rng, 5 + rng() % 20, 3 + rng() % 4, 3 + static_cast<int>(rng() % 5));
    const auto res = adls::friedman_test(m);
    const double expected = friedman_oracle(m);
    if (std::isfinite(expected)) CHECK(res.statistic == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("friedman p-value for three degrees of freedom") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_matrix(rng, 12, 4, 10);
    const auto res = adls::friedman_test(m);
    const double x = res.statistic;
    // chi-square(3) survival function in closed form
    const double q = std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / std::numbers::pi) * std::exp(-x / 2);
    CHECK(res.df == 3);
    CHECK(res.p_value == doctest::Approx(q).epsilon(1e-10));
  }
}

TEST_CASE("friedman on identical models") {
  adls::ResultMatrix m{{"a", "b", "c"}, {"x", "y"}, {1, 1, 1, 2, 2, 2}};
  const auto res = adls::friedman_test(m);
  CHECK(res.statistic == 0.0);
  CHECK(res.p_value == 1.0);
}

TEST_CASE("result matrix parsing") {
  std::istringstream ok("dataset,A,B\nd1,0.5,0.7\nd2,0.4,0.1\n");
  const auto m = adls::parse_result_matrix_csv(ok);
  CHECK(m.models == std::vector<std::string>{"A", "B"});
  CHECK(m.at(1, 1) == doctest::Approx(0.1));

  std::istringstream bad("dataset,A,B\nd1,,0.7\nd2,0.4,x\n");
  try {
    adls::parse_result_matrix_csv(bad, "t.csv");
    FAIL("expected an error");
  } catch (const adls::InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("d1") != std::string::npos);
    CHECK(msg.find("d2") != std::string::npos);
  }
  CHECK_THROWS_AS(adls::read_result_matrix_csv("/nonexistent/r.csv"), adls::InputError);
}

TEST_CASE("exhaustive set counts follow the Bell numbers") {
  CHECK(adls::exhaustive_sets(2).size() == 1);
  CHECK(adls::exhaustive_sets(3).size() == 4);
  CHECK(adls::exhaustive_sets(4).size() == 14);
  CHECK(adls::exhaustive_sets(5).size() == 51);
  CHECK_THROWS_AS(adls::exhaustive_sets(10), adls::InputError);
}

TEST_CASE("exhaustive sets are transitively closed") {
  const std::size_t k = 5;
  for (std::uint64_t set : adls::exhaustive_sets(k)) {
    auto has = [&](std::size_t i, std::size_t j) {
      if (i > j) std::swap(i, j);
      return (set >> adls::pair_index(i, j, k)) & 1;
    };
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        for (std::size_t c = 0; c < k; ++c)
          if (a != b && b != c && a != c && has(a, b) && has(b, c)) CHECK(has(a, c));
  }
}

TEST_CASE("bergmann-hommel is never less powerful than holm") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 3 + rng() % 4;
    std::vector<double> ranks(k);
    for (double& r : ranks) r = 1.0 + std::uniform_real_distribution<double>(0, static_cast<double>(k - 1))(rng);
    const auto z = adls::pairwise_z(ranks, 10 + rng() % 30);
    const auto bh = adls::bergmann_hommel(z, k);
    const auto hm = adls::holm(z);
    for (std::size_t i = 0; i < z.size(); ++i) {
      CHECK(bh.entries[i].adjusted_p >= bh.entries[i].raw_p - 1e-15);
      CHECK(bh.entries[i].adjusted_p <= hm.entries[i].adjusted_p + 1e-12);
      if (hm.entries[i].reject) CHECK(bh.entries[i].reject);
    }
  }
}

TEST_CASE("bergmann-hommel refuses large families") {
  std::vector<double> ranks(10, 5.5);
  const auto z = adls::pairwise_z(ranks, 20);
  CHECK_THROWS_AS(adls::bergmann_hommel(z, 10), adls::InputError);
}

TEST_CASE("published result table") {
  const auto m = adls::read_result_matrix_csv(fixture_path());
  CHECK(m.rows() == 29);
  const auto ranks = adls::friedman_ranks(m);
  // MLP, LSTM, CNN, TCN
  CHECK(std::abs(ranks[0] - 3.700) < 0.05);
  CHECK(std::abs(ranks[1] - 2.566) < 0.05);
  CHECK(std::abs(ranks[2] - 1.200) < 0.05);
  CHECK(std::abs(ranks[3] - 2.533) < 0.05);
  CHECK(adls::friedman_test(m).p_value < 1e-3);
  const auto z = adls::pairwise_z(ranks, m.rows());
  const auto bh = adls::bergmann_hommel(z, m.cols());
  int rejected = 0;
  for (const auto& e : bh.entries) {
    rejected += e.reject;
    const bool lstm_tcn = e.first == 1 && e.second == 3;
    CHECK(e.reject == !lstm_tcn);
  }
  CHECK(rejected == 5);
}
