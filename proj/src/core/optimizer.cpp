#include "adls/optimizer.hpp"

#include <cmath>

namespace adls {

const char* to_string(OptimizerConfig::Kind kind) {
  return kind == OptimizerConfig::Kind::adam ? "adam" : "sgd";
}

OptimizerConfig::Kind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerConfig::Kind::adam;
  if (name == "sgd") return OptimizerConfig::Kind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)", name);
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw ConfigError("Adam betas must be in [0, 1)");
  }
}

template <typename T>
void Optimizer<T>::step(std::span<ParamTensor<T>* const> params) {
  for (const ParamTensor<T>* p : params) {
    if (p->grad.size() != p->value.size()) throw ConfigError("gradient shape mismatch", p->name);
    if (!p->grad.all_finite()) throw TrainingError("non-finite gradient in parameter " + p->name, p->name);
  }
  ++steps_;
  const T lr = static_cast<T>(config_.learning_rate);

  if (config_.kind == OptimizerConfig::Kind::sgd) {
    for (ParamTensor<T>* p : params) {
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
    }
    return;
  }

  if (first_moment_.empty()) {
    for (const ParamTensor<T>* p : params) {
      first_moment_.emplace_back(p->value.size(), T{0});
      second_moment_.emplace_back(p->value.size(), T{0});
    }
  }
  if (first_moment_.size() != params.size()) throw ConfigError("optimizer parameter list changed");

  const double t = static_cast<double>(steps_);
  const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(config_.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(config_.beta2, t));
  const T eps = static_cast<T>(config_.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamTensor<T>& p = *params[k];
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    if (m.size() != p.value.size()) throw ConfigError("optimizer state shape mismatch", p.name);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const T g = p.grad[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const T m_hat = m[i] / correction1;
      const T v_hat = v[i] / correction2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace adls
