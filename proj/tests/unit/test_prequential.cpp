#include <cmath>
#include <random>
#include <vector>

#include "adls/error.hpp"
#include "adls/prequential.hpp"
#include "doctest.h"

using adls::PrequentialState;

TEST_CASE("prequential accuracy decays the earlier outcome") {
  PrequentialState s(2, 0.99);
  s.update(1, 1);
  CHECK(s.accuracy() == doctest::Approx(1.0));
  s.update(0, 1);
  CHECK(s.accuracy() == doctest::Approx(0.99 / 1.99).epsilon(1e-15));
  CHECK(s.count() == 2);
}

TEST_CASE("prequential reads before any update are state errors") {
  PrequentialState s(3);
  CHECK_THROWS_AS(s.accuracy(), adls::StateError);
  CHECK_THROWS_AS(s.kappa(), adls::StateError);
}

TEST_CASE("prequential rejects out-of-range labels and bad alpha") {
  CHECK_THROWS_AS(PrequentialState(1), adls::ConfigError);
  CHECK_THROWS_AS(PrequentialState(2, 0.0), adls::ConfigError);
  CHECK_THROWS_AS(PrequentialState(2, 1.5), adls::ConfigError);
  PrequentialState s(2);
  CHECK_THROWS_AS(s.update(2, 0), adls::InputError);
}

TEST_CASE("alpha of one gives the plain running mean") {
  PrequentialState s(2, 1.0);
  std::mt19937_64 rng(5);
  int correct = 0;
  for (int i = 1; i <= 500; ++i) {
    const std::size_t truth = rng() % 2, pred = rng() % 2;
    correct += truth == pred;
    s.update(truth, pred);
    CHECK(s.accuracy() == doctest::Approx(static_cast<double>(correct) / i).epsilon(1e-12));
  }
}

TEST_CASE("recursive accuracy matches direct weighted summation") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = 0.9 + 0.1 * std::uniform_real_distribution<double>(0, 1)(rng);
    PrequentialState s(3, alpha);
    std::vector<int> outcomes;
    for (int i = 0; i < 2000; ++i) {
      const std::size_t truth = rng() % 3, pred = rng() % 3;
      outcomes.push_back(truth == pred);
      s.update(truth, pred);
    }
    double num = 0.0, den = 0.0;
    const std::size_t n = outcomes.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double w = std::pow(alpha, static_cast<double>(n - 1 - k));
      num += w * outcomes[k];
      den += w;
    }
    CHECK(std::abs(s.accuracy() - num / den) < 1e-9);
  }
}

TEST_CASE("kappa of a fixed matrix") {
  const std::vector<double> m{3, 1, 2, 4};
  CHECK(adls::kappa_from_confusion(m, 2) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(adls::accuracy_from_confusion(m, 2) == doctest::Approx(0.7));
}

TEST_CASE("kappa degenerate chance agreement") {
  CHECK(adls::kappa_from_confusion(std::vector<double>{5, 0, 0, 0}, 2) == 1.0);
  CHECK(adls::kappa_from_confusion(std::vector<double>{0, 5, 0, 0}, 2) == 0.0);
}

TEST_CASE("kappa is invariant to a consistent relabelling of classes") {
  std::mt19937_64 rng(3);
  PrequentialState a(3), b(3);
  const std::size_t perm[3] = {2, 0, 1};
  for (int i = 0; i < 300; ++i) {
    const std::size_t t = rng() % 3, p = (rng() % 4 == 0) ? rng() % 3 : t;
    a.update(t, p);
    b.update(perm[t], perm[p]);
  }
  CHECK(a.kappa() == doctest::Approx(b.kappa()).epsilon(1e-12));
}

TEST_CASE("fading factor forgets an early run of mistakes") {
  PrequentialState s(2, 0.99);
  for (int i = 0; i < 200; ++i) s.update(0, 1);
  CHECK(s.accuracy() < 0.01);
  for (int i = 0; i < 1000; ++i) s.update(i % 2, i % 2);
  CHECK(s.accuracy() > 0.99);
  CHECK(s.kappa() > 0.95);
}

TEST_CASE("stream summary") {
  const std::vector<double> trace{0.2, 0.4, 0.6};
  const adls::KappaSummary s = adls::stream_summary(trace);
  CHECK(s.final_kappa == doctest::Approx(0.6));
  CHECK(s.mean_kappa == doctest::Approx(0.4));
  CHECK(s.count == 3);
  const adls::KappaSummary e = adls::stream_summary({});
  CHECK(e.count == 0);
  CHECK(e.final_kappa == 0.0);
}
