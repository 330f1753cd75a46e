#include "adls/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace adls {

using kernels::Activation;
using kernels::Mode;
using kernels::Padding;

const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::mlp: return "MLP";
    case Architecture::cnn: return "CNN";
    case Architecture::lstm: return "LSTM";
    case Architecture::tcn: return "TCN";
  }
  return "?";
}

const char* to_string(Precision p) { return p == Precision::f32 ? "float32" : "float64"; }

Architecture parse_architecture(const std::string& name) {
  std::string upper;
  for (char ch : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (upper == "MLP") return Architecture::mlp;
  if (upper == "CNN") return Architecture::cnn;
  if (upper == "LSTM") return Architecture::lstm;
  if (upper == "TCN") return Architecture::tcn;
  throw ConfigError("unknown architecture '" + name + "' (expected MLP, CNN, LSTM or TCN)", name);
}

Precision parse_precision(const std::string& name) {
  if (name == "float32" || name == "f32" || name == "32") return Precision::f32;
  if (name == "float64" || name == "f64" || name == "64") return Precision::f64;
  throw ConfigError("unknown precision '" + name + "' (expected float32 or float64)", name);
}

void validate(const ModelSpec& spec) {
  if (spec.features < 1) throw ConfigError("model needs at least one input feature");
  if (spec.classes < 2) throw ConfigError("model needs at least two classes");
  if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0, 1)");
  }
  if (spec.architecture == Architecture::cnn && spec.features < kMinCnnFeatures) {
    throw ConfigError("CNN needs series length >= " + std::to_string(kMinCnnFeatures) +
                      " for its two pooling stages, got " + std::to_string(spec.features));
  }
  if (spec.architecture == Architecture::tcn) {
    if (spec.tcn_kernel < 1 || spec.tcn_filters < 1) throw ConfigError("TCN kernel and filters must be positive");
    if (spec.tcn_dilations.empty()) throw ConfigError("TCN needs at least one dilation");
    for (std::size_t d : spec.tcn_dilations) {
      if (d < 1) throw ConfigError("TCN dilations must be positive");
    }
  }
}

std::string spec_fingerprint(const ModelSpec& spec) {
  std::ostringstream os;
  os << to_string(spec.architecture) << ";f=" << spec.features << ";c=" << spec.classes
     << ";dropout=" << spec.dropout_rate << ";" << to_string(spec.precision);
  if (spec.architecture == Architecture::tcn) {
    os << ";k=" << spec.tcn_kernel << ";filters=" << spec.tcn_filters << ";dilations=";
    for (std::size_t i = 0; i < spec.tcn_dilations.size(); ++i) os << (i ? "," : "") << spec.tcn_dilations[i];
  }
  return os.str();
}

std::size_t tcn_receptive_field(const ModelSpec& spec) {
  const std::size_t sum = std::accumulate(spec.tcn_dilations.begin(), spec.tcn_dilations.end(), std::size_t{0});
  return 1 + kTcnConvsPerBlock * (spec.tcn_kernel - 1) * sum;
}

std::uint64_t published_parameter_formula(const ModelSpec& spec) {
  const std::uint64_t f = spec.features, c = spec.classes;
  switch (spec.architecture) {
    case Architecture::mlp: return f * 32 + 10240 + c * 128;
    case Architecture::cnn: return f * 2048 + 43648 + c * 32;
    case Architecture::lstm: return f * 8192 + 117760 + c * 32;
    case Architecture::tcn: return f * 4096 + 372096 + c * 32;
  }
  return 0;
}

template <typename T>
Model<T>::Model(const ModelSpec& spec, std::uint64_t seed)
    : spec_(spec), dropout_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  validate(spec_);
  std::mt19937_64 init(seed);
  const std::size_t f = spec_.features, c = spec_.classes;
  const double rate = spec_.dropout_rate;

  auto dense_head = [&](std::size_t in, std::initializer_list<std::size_t> widths) {
    std::size_t width = in;
    std::size_t index = 1;
    for (std::size_t next : widths) {
      add(std::make_unique<DenseLayer<T>>("dense" + std::to_string(index++), width, next, Activation::relu, init));
      add(std::make_unique<DropoutLayer<T>>(rate));
      width = next;
    }
    add(std::make_unique<DenseLayer<T>>("output", width, c, Activation::linear, init, true));
  };

  switch (spec_.architecture) {
    case Architecture::mlp:
      input_shape_ = {f};
      dense_head(f, {32, 64, 128});
      break;
    case Architecture::cnn: {
      input_shape_ = {f, 1};
      add(std::make_unique<Conv1dLayer<T>>("conv1", 7, 1, 64, 1, Padding::same, Activation::relu, init));
      add(std::make_unique<MaxPoolLayer<T>>(2, 2));
      add(std::make_unique<Conv1dLayer<T>>("conv2", 5, 64, 128, 1, Padding::same, Activation::relu, init));
      add(std::make_unique<MaxPoolLayer<T>>(2, 2));
      add(std::make_unique<FlattenLayer<T>>());
      dense_head(shape_product(shapes_.back()), {64, 32});
      break;
    }
    case Architecture::lstm:
      input_shape_ = {f, 1};
      add(std::make_unique<LstmLayer<T>>("lstm1", 1, 64, init));
      add(std::make_unique<LstmLayer<T>>("lstm2", 64, 128, init));
      add(std::make_unique<FlattenLayer<T>>());
      dense_head(shape_product(shapes_.back()), {64, 32});
      break;
    case Architecture::tcn:
      input_shape_ = {f, 1};
      add(std::make_unique<TcnLayer<T>>("tcn", 1, spec_.tcn_filters, spec_.tcn_kernel, spec_.tcn_dilations, init));
      add(std::make_unique<FlattenLayer<T>>());
      dense_head(shape_product(shapes_.back()), {64, 32});
      break;
  }

  for (auto& layer : layers_) layer->collect_params(params_);
  for (const ParamTensor<T>* p : params_) value_count_ += p->value.size();
}

template <typename T>
void Model<T>::add(std::unique_ptr<Layer<T>> layer) {
  const Shape& in = shapes_.empty() ? input_shape_ : shapes_.back();
  shapes_.push_back(layer->output_shape(in));
  layers_.push_back(std::move(layer));
}

template <typename T>
Tensor<T> Model<T>::to_input(std::span<const double> x) const {
  if (x.size() != spec_.features) {
    throw InputError("expected " + std::to_string(spec_.features) + " features, got " +
                     std::to_string(x.size()));
  }
  Tensor<T> t(input_shape_);
  for (std::size_t i = 0; i < x.size(); ++i) t[i] = static_cast<T>(x[i]);
  return t;
}

template <typename T>
Tensor<T> Model<T>::forward_logits(const Tensor<T>& x, Mode mode) {
  Tensor<T> h = x;
  for (auto& layer : layers_) h = layer->forward(h, mode, dropout_rng_);
  return h;
}

template <typename T>
Tensor<T> Model<T>::forward_classify(std::span<const double> x) {
  if (mode_ != Mode::infer) throw StateError("forward_classify requires infer mode");
  Tensor<T> probs = kernels::softmax(forward_logits(to_input(x), Mode::infer));
  if (!probs.all_finite()) throw TrainingError("non-finite class probabilities");
  return probs;
}

template <typename T>
std::size_t Model<T>::predict(std::span<const double> x) {
  const Tensor<T> p = forward_classify(x);
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

template <typename T>
double Model<T>::train_batch(std::span<const Instance> batch, Optimizer<T>& optimizer) {
  if (mode_ != Mode::train) throw StateError("train_batch requires train mode");
  if (batch.empty()) throw InputError("train_batch needs a non-empty batch");
  for (ParamTensor<T>* p : params_) p->zero_grad();

  double total_loss = 0.0;
  const T scale = T{1} / static_cast<T>(batch.size());
  for (const Instance& inst : batch) {
    if (inst.label >= spec_.classes) {
      throw InputError("label " + std::to_string(inst.label) + " out of range for " +
                       std::to_string(spec_.classes) + " classes");
    }
    const Tensor<T> logits = forward_logits(to_input(inst.features), Mode::train);
    kernels::SoftmaxLoss<T> loss = kernels::softmax_cross_entropy(logits, inst.label);
    if (!std::isfinite(static_cast<double>(loss.loss))) {
      throw TrainingError("non-finite loss at instance " + std::to_string(inst.seq));
    }
    total_loss += static_cast<double>(loss.loss);
    for (T& g : loss.grad.values()) g *= scale;
    Tensor<T> g = std::move(loss.grad);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  }
  optimizer.step(params_);
  return total_loss / static_cast<double>(batch.size());
}

template <typename T>
std::size_t Model<T>::parameter_count(CountConvention convention) const {
  std::size_t n = 0;
  for (const ParamTensor<T>* p : params_) {
    if (convention == CountConvention::weights_only && p->dense_bias) continue;
    n += p->value.size();
  }
  return n;
}

template <typename T>
std::string Model<T>::fingerprint() const {
  std::string out = std::string(to_string(spec_.architecture)) + ": Input(" + shape_string(input_shape_) + ")";
  for (const auto& layer : layers_) out += " > " + layer->describe();
  return out;
}

template <typename T>
std::vector<std::string> Model<T>::table_rows() const {
  std::vector<std::string> rows{"Input(" + std::to_string(spec_.features) + ")"};
  for (const auto& layer : layers_) {
    if (layer->is_table_row()) rows.push_back(layer->describe());
  }
  return rows;
}

template <typename T>
std::vector<std::pair<std::string, Shape>> Model<T>::table_layout() const {
  std::vector<std::pair<std::string, Shape>> rows{{"Input(" + std::to_string(spec_.features) + ")", {spec_.features}}};
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i]->is_table_row()) rows.emplace_back(layers_[i]->describe(), shapes_[i]);
  }
  return rows;
}

template <typename T>
void Model<T>::copy_values(std::span<T> out) const {
  if (out.size() != value_count_) throw ConfigError("value buffer has wrong length");
  std::size_t offset = 0;
  for (const ParamTensor<T>* p : params_) {
    std::copy(p->value.values().begin(), p->value.values().end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p->value.size();
  }
}

template <typename T>
void Model<T>::load_values(std::span<const T> values) {
  if (values.size() != value_count_) {
    throw ConfigError("snapshot holds " + std::to_string(values.size()) + " values, model needs " +
                      std::to_string(value_count_));
  }
  std::size_t offset = 0;
  for (ParamTensor<T>* p : params_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), p->value.size(), p->value.values().begin());
    offset += p->value.size();
  }
}

template class Model<float>;
template class Model<double>;

}  // namespace adls
