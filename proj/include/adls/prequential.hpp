#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace adls {

// Fading-factor prequential accuracy and Kappa. Each update scales every
// accumulator by alpha before adding the new outcome, which realises
//   P(i) = sum_k alpha^(i-k) acc_k / sum_k alpha^(i-k)
// with acc_k the 0/1 correctness of instance k.
class PrequentialState {
 public:
  PrequentialState(std::size_t classes, double alpha = 0.99);

  void update(std::size_t true_label, std::size_t predicted_label);

  // Throws StateError before the first update.
  double accuracy() const;
  double kappa() const;

  double alpha() const noexcept { return alpha_; }
  std::size_t classes() const noexcept { return classes_; }
  std::uint64_t count() const noexcept { return count_; }
  double weighted_total() const noexcept { return weighted_total_; }
  double weighted_correct() const noexcept { return weighted_correct_; }
  // Row-major [true x predicted].
  std::span<const double> confusion() const noexcept { return confusion_; }

 private:
  std::size_t classes_;
  double alpha_;
  double weighted_total_ = 0.0;
  double weighted_correct_ = 0.0;
  std::vector<double> confusion_;
  std::uint64_t count_ = 0;
};

// Chance-corrected agreement of a (possibly decayed) confusion matrix,
// rows = true class. When chance agreement is 1 the result is 1 for a
// perfect matrix and 0 otherwise.
double kappa_from_confusion(std::span<const double> confusion, std::size_t classes);
double accuracy_from_confusion(std::span<const double> confusion, std::size_t classes);

struct KappaSummary {
  double final_kappa = 0.0;
  double mean_kappa = 0.0;
  std::size_t count = 0;  // zero when the trace was empty; both values are then 0
};

KappaSummary stream_summary(std::span<const double> kappa_trace);

}  // namespace adls
