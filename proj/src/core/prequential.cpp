#include "adls/prequential.hpp"

#include <numeric>
#include <string>

#include "adls/error.hpp"

namespace adls {

namespace {
constexpr double kChanceEps = 1e-12;
}

PrequentialState::PrequentialState(std::size_t classes, double alpha)
    : classes_(classes), alpha_(alpha), confusion_(classes * classes, 0.0) {
  if (classes < 2) throw ConfigError("prequential evaluation needs at least two classes");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("decay factor alpha must be in (0, 1]");
}

void PrequentialState::update(std::size_t true_label, std::size_t predicted_label) {
  if (true_label >= classes_ || predicted_label >= classes_) {
    throw InputError("label out of range: true " + std::to_string(true_label) + ", predicted " +
                     std::to_string(predicted_label) + ", classes " + std::to_string(classes_));
  }
  if (alpha_ != 1.0) {
    weighted_total_ *= alpha_;
    weighted_correct_ *= alpha_;
    for (double& m : confusion_) m *= alpha_;
  }
  weighted_total_ += 1.0;
  confusion_[true_label * classes_ + predicted_label] += 1.0;
  if (true_label == predicted_label) weighted_correct_ += 1.0;
  ++count_;
}

double PrequentialState::accuracy() const {
  if (count_ == 0) throw StateError("prequential accuracy is undefined before the first update");
  return weighted_correct_ / weighted_total_;
}

double PrequentialState::kappa() const {
  if (count_ == 0) throw StateError("kappa is undefined before the first update");
  return kappa_from_confusion(confusion_, classes_);
}

double accuracy_from_confusion(std::span<const double> confusion, std::size_t classes) {
  const double total = std::accumulate(confusion.begin(), confusion.end(), 0.0);
  if (!(total > 0.0)) throw StateError("confusion matrix is empty");
  double diag = 0.0;
  for (std::size_t j = 0; j < classes; ++j) diag += confusion[j * classes + j];
  return diag / total;
}

double kappa_from_confusion(std::span<const double> confusion, std::size_t classes) {
  if (confusion.size() != classes * classes) throw ConfigError("confusion matrix has wrong size");
  const double total = std::accumulate(confusion.begin(), confusion.end(), 0.0);
  if (!(total > 0.0)) throw StateError("confusion matrix is empty");
  const double p0 = accuracy_from_confusion(confusion, classes);
  double pc = 0.0;
  for (std::size_t j = 0; j < classes; ++j) {
    double row = 0.0, col = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
      row += confusion[j * classes + i];
      col += confusion[i * classes + j];
    }
    pc += (row / total) * (col / total);
  }
  if (1.0 - pc < kChanceEps) return p0 >= 1.0 - kChanceEps ? 1.0 : 0.0;
  return (p0 - pc) / (1.0 - pc);
}

KappaSummary stream_summary(std::span<const double> kappa_trace) {
  KappaSummary s;
  if (kappa_trace.empty()) return s;
  s.count = kappa_trace.size();
  s.final_kappa = kappa_trace.back();
  s.mean_kappa = std::accumulate(kappa_trace.begin(), kappa_trace.end(), 0.0) / static_cast<double>(s.count);
  return s;
}

}  // namespace adls
