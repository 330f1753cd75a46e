#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adls/instance.hpp"
#include "adls/layers.hpp"
#include "adls/optimizer.hpp"
#include "adls/tensor.hpp"

namespace adls {

enum class Architecture { mlp, cnn, lstm, tcn };
enum class Precision { f32, f64 };
enum class CountConvention { weights_only, all_trainable };

const char* to_string(Architecture a);
const char* to_string(Precision p);
Architecture parse_architecture(const std::string& name);
Precision parse_precision(const std::string& name);

struct ModelSpec {
  Architecture architecture = Architecture::mlp;
  std::size_t features = 0;  // series length f
  std::size_t classes = 0;   // class count c
  double dropout_rate = 0.2;
  Precision precision = Precision::f32;
  std::size_t tcn_kernel = 5;
  std::size_t tcn_filters = 64;
  std::vector<std::size_t> tcn_dilations = {1, 2, 4, 8, 16, 32, 64};
};

// Throws ConfigError on an unusable spec (f < 1, c < 2, CNN with f < 4, ...).
void validate(const ModelSpec& spec);

// Identifies architecture, shapes and precision; snapshots carry it.
std::string spec_fingerprint(const ModelSpec& spec);

constexpr std::size_t kTcnConvsPerBlock = 2;
constexpr std::size_t kMinCnnFeatures = 4;

// 1 + convs_per_block * (k - 1) * sum(dilations)
std::size_t tcn_receptive_field(const ModelSpec& spec);

// The closed-form parameter counts printed next to each architecture:
// MLP f*32+10240+c*128, CNN f*2048+43648+c*32, LSTM f*8192+117760+c*32,
// TCN f*4096+372096+c*32. Only meaningful for the default layer widths.
std::uint64_t published_parameter_formula(const ModelSpec& spec);

template <typename T>
class Model {
 public:
  Model(const ModelSpec& spec, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const noexcept { return spec_; }

  kernels::Mode mode() const noexcept { return mode_; }
  void set_mode(kernels::Mode mode) noexcept { mode_ = mode; }

  // Class probabilities for one series; requires infer mode.
  Tensor<T> forward_classify(std::span<const double> x);
  std::size_t predict(std::span<const double> x);

  // One forward/backward pass per instance, averaged gradients, one optimizer
  // step. Returns the mean cross-entropy before the step. Requires train mode.
  double train_batch(std::span<const Instance> batch, Optimizer<T>& optimizer);

  std::span<ParamTensor<T>* const> params() noexcept { return params_; }
  std::size_t parameter_count(CountConvention convention) const;

  // Every layer, in order, joined with " > ".
  std::string fingerprint() const;
  // Only the layers that correspond to rows of the architecture tables.
  std::vector<std::string> table_rows() const;
  // table_rows() paired with each row's output shape (Input pairs with {f}).
  std::vector<std::pair<std::string, Shape>> table_layout() const;
  const Shape& input_shape() const noexcept { return input_shape_; }
  // Output shape of each layer in order.
  const std::vector<Shape>& layer_shapes() const noexcept { return shapes_; }

  // Flat copy of all parameter values in enumeration order.
  std::size_t value_count() const noexcept { return value_count_; }
  void copy_values(std::span<T> out) const;
  void load_values(std::span<const T> values);

 private:
  Tensor<T> to_input(std::span<const double> x) const;
  Tensor<T> forward_logits(const Tensor<T>& x, kernels::Mode mode);
  void add(std::unique_ptr<Layer<T>> layer);

  ModelSpec spec_;
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Shape> shapes_;
  std::vector<ParamTensor<T>*> params_;
  std::size_t value_count_ = 0;
  kernels::Mode mode_ = kernels::Mode::infer;
  std::mt19937_64 dropout_rng_;
};

}  // namespace adls
