#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adls/tensor.hpp"

namespace adls {

struct OptimizerConfig {
  enum class Kind { adam, sgd };
  Kind kind = Kind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

const char* to_string(OptimizerConfig::Kind kind);
OptimizerConfig::Kind parse_optimizer_kind(const std::string& name);

// Adam (bias-corrected) or plain SGD over a fixed, ordered parameter list.
// Moment buffers are allocated on the first step.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {});

  // Throws TrainingError naming the first parameter with a non-finite gradient;
  // in that case no parameter is modified.
  void step(std::span<ParamTensor<T>* const> params);

  std::uint64_t steps() const noexcept { return steps_; }
  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<T>> first_moment_;
  std::vector<std::vector<T>> second_moment_;
};

}  // namespace adls
