#include "adls/layers.hpp"

#include <cmath>
#include <sstream>

namespace adls {

using kernels::Activation;
using kernels::Mode;
using kernels::Padding;

namespace {

template <typename T>
void glorot_uniform(Tensor<T>& t, double fan_in, double fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (T& v : t.values()) v = static_cast<T>((2.0 * kernels::uniform01(rng) - 1.0) * limit);
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

// ---- dense ---------------------------------------------------------------

template <typename T>
DenseLayer<T>::DenseLayer(std::string name, std::size_t in, std::size_t out, Activation act,
                          std::mt19937_64& init_rng, bool is_output)
    : w_(name + ".w", {in, out}), b_(name + ".b", {out}, true), act_(act), is_output_(is_output) {
  glorot_uniform(w_.value, static_cast<double>(in), static_cast<double>(out), init_rng);
}

template <typename T>
Tensor<T> DenseLayer<T>::forward(const Tensor<T>& x, Mode, std::mt19937_64&) {
  x_ = x;
  out_ = kernels::dense_forward(x, w_.value, b_.value, act_);
  return out_;
}

template <typename T>
Tensor<T> DenseLayer<T>::backward(const Tensor<T>& grad_out) {
  return kernels::dense_backward(x_, w_.value, out_, grad_out, act_, w_.grad, b_.grad);
}

template <typename T>
Shape DenseLayer<T>::output_shape(const Shape& in) const {
  if (shape_product(in) != w_.value.dim(0)) {
    throw ConfigError("dense layer " + w_.name + " expects " + std::to_string(w_.value.dim(0)) +
                      " inputs, got " + shape_string(in));
  }
  return {w_.value.dim(1)};
}

template <typename T>
void DenseLayer<T>::collect_params(std::vector<ParamTensor<T>*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

template <typename T>
std::string DenseLayer<T>::describe() const {
  if (is_output_) return "Softmax(" + std::to_string(w_.value.dim(1)) + ")";
  return "Dense(" + std::to_string(w_.value.dim(1)) + "," + kernels::to_string(act_) + ")";
}

// ---- dropout -------------------------------------------------------------

template <typename T>
DropoutLayer<T>::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
}

template <typename T>
Tensor<T> DropoutLayer<T>::forward(const Tensor<T>& x, Mode mode, std::mt19937_64& rng) {
  return kernels::dropout(x, rate_, mode, rng, &mask_);
}

template <typename T>
Tensor<T> DropoutLayer<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask_[i];
  return g;
}

template <typename T>
std::string DropoutLayer<T>::describe() const {
  std::ostringstream os;
  os << "Dropout(" << rate_ << ")";
  return os.str();
}

// ---- flatten -------------------------------------------------------------

template <typename T>
Tensor<T> FlattenLayer<T>::forward(const Tensor<T>& x, Mode, std::mt19937_64&) {
  in_shape_ = x.shape();
  Tensor<T> y = x;
  y.reshape({x.size()});
  return y;
}

template <typename T>
Tensor<T> FlattenLayer<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  g.reshape(in_shape_);
  return g;
}

// ---- conv1d --------------------------------------------------------------

template <typename T>
Conv1dLayer<T>::Conv1dLayer(std::string name, std::size_t kernel, std::size_t in_channels,
                            std::size_t out_channels, std::size_t dilation, Padding padding,
                            Activation act, std::mt19937_64& init_rng)
    : w_(name + ".w", {kernel, in_channels, out_channels}),
      b_(name + ".b", {out_channels}),
      dilation_(dilation),
      padding_(padding),
      act_(act) {
  if (dilation == 0) throw ConfigError("conv1d dilation must be positive", name);
  glorot_uniform(w_.value, static_cast<double>(kernel * in_channels),
                 static_cast<double>(kernel * out_channels), init_rng);
}

template <typename T>
Tensor<T> Conv1dLayer<T>::forward(const Tensor<T>& x, Mode, std::mt19937_64&) {
  x_ = x;
  out_ = kernels::conv1d_forward(x, w_.value, b_.value, dilation_, padding_, act_);
  return out_;
}

template <typename T>
Tensor<T> Conv1dLayer<T>::backward(const Tensor<T>& grad_out) {
  return kernels::conv1d_backward(x_, w_.value, out_, grad_out, dilation_, padding_, act_, w_.grad,
                                  b_.grad);
}

template <typename T>
Shape Conv1dLayer<T>::output_shape(const Shape& in) const {
  return {in.at(0), w_.value.dim(2)};
}

template <typename T>
void Conv1dLayer<T>::collect_params(std::vector<ParamTensor<T>*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

template <typename T>
std::string Conv1dLayer<T>::describe() const {
  std::string s = "Conv1D(k=" + std::to_string(w_.value.dim(0)) +
                  ",maps=" + std::to_string(w_.value.dim(2)) + "," + kernels::to_string(padding_);
  if (dilation_ != 1) s += ",d=" + std::to_string(dilation_);
  return s + "," + kernels::to_string(act_) + ")";
}

// ---- max pool ------------------------------------------------------------

template <typename T>
Tensor<T> MaxPoolLayer<T>::forward(const Tensor<T>& x, Mode, std::mt19937_64&) {
  channels_ = x.dim(1);
  return kernels::max_pool1d_forward(x, kernel_, stride_, &index_);
}

template <typename T>
Tensor<T> MaxPoolLayer<T>::backward(const Tensor<T>& grad_out) {
  return kernels::max_pool1d_backward(grad_out, index_, channels_);
}

template <typename T>
Shape MaxPoolLayer<T>::output_shape(const Shape& in) const {
  return {kernels::pooled_length(in.at(0), stride_), in.at(1)};
}

template <typename T>
std::string MaxPoolLayer<T>::describe() const {
  return "MaxPool(k=" + std::to_string(kernel_) + ",stride=" + std::to_string(stride_) + ")";
}

// ---- LSTM ----------------------------------------------------------------

template <typename T>
LstmLayer<T>::LstmLayer(std::string name, std::size_t in_channels, std::size_t units,
                        std::mt19937_64& init_rng)
    : w_x_(name + ".w_x", {in_channels, 4 * units}),
      w_h_(name + ".w_h", {units, 4 * units}),
      b_(name + ".b", {4 * units}) {
  glorot_uniform(w_x_.value, static_cast<double>(in_channels), static_cast<double>(4 * units), init_rng);
  glorot_uniform(w_h_.value, static_cast<double>(units), static_cast<double>(4 * units), init_rng);
  for (std::size_t u = 0; u < units; ++u) b_.value[units + u] = T{1};  // forget gate
}

template <typename T>
Tensor<T> LstmLayer<T>::forward(const Tensor<T>& x, Mode, std::mt19937_64&) {
  x_ = x;
  return kernels::lstm_forward(x, w_x_.value, w_h_.value, b_.value, &cache_);
}

template <typename T>
Tensor<T> LstmLayer<T>::backward(const Tensor<T>& grad_out) {
  return kernels::lstm_backward(x_, w_x_.value, w_h_.value, cache_, grad_out, w_x_.grad, w_h_.grad,
                                b_.grad);
}

template <typename T>
Shape LstmLayer<T>::output_shape(const Shape& in) const {
  return {in.at(0), w_h_.value.dim(0)};
}

template <typename T>
void LstmLayer<T>::collect_params(std::vector<ParamTensor<T>*>& out) {
  out.push_back(&w_x_);
  out.push_back(&w_h_);
  out.push_back(&b_);
}

template <typename T>
std::string LstmLayer<T>::describe() const {
  return "LSTM(units=" + std::to_string(w_h_.value.dim(0)) + ",sequences)";
}

// ---- TCN -----------------------------------------------------------------

template <typename T>
ResidualBlock<T>::ResidualBlock(std::string name, std::size_t in_channels, std::size_t filters,
                                std::size_t kernel, std::size_t dilation, std::mt19937_64& init_rng)
    : w1_(name + ".conv1.w", {kernel, in_channels, filters}),
      b1_(name + ".conv1.b", {filters}),
      w2_(name + ".conv2.w", {kernel, filters, filters}),
      b2_(name + ".conv2.b", {filters}),
      dilation_(dilation) {
  if (dilation == 0) throw ConfigError("TCN dilation must be positive", name);
  glorot_uniform(w1_.value, static_cast<double>(kernel * in_channels),
                 static_cast<double>(kernel * filters), init_rng);
  glorot_uniform(w2_.value, static_cast<double>(kernel * filters),
                 static_cast<double>(kernel * filters), init_rng);
  if (in_channels != filters) {
    wd_ = std::make_unique<ParamTensor<T>>(name + ".downsample.w", Shape{1, in_channels, filters});
    bd_ = std::make_unique<ParamTensor<T>>(name + ".downsample.b", Shape{filters});
    glorot_uniform(wd_->value, static_cast<double>(in_channels), static_cast<double>(filters), init_rng);
  }
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) {
  x_ = x;
  h1_ = kernels::conv1d_forward(x, w1_.value, b1_.value, dilation_, Padding::causal, Activation::relu);
  h2_ = kernels::conv1d_forward(h1_, w2_.value, b2_.value, dilation_, Padding::causal, Activation::relu);
  out_ = wd_ ? kernels::conv1d_forward(x, wd_->value, bd_->value, 1, Padding::causal) : x;
  for (std::size_t i = 0; i < out_.size(); ++i) {
    const T s = out_[i] + h2_[i];
    out_[i] = s > T{0} ? s : T{0};
  }
  return out_;
}

template <typename T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(out_[i] > T{0})) g[i] = T{0};
  }
  const Tensor<T> g_h1 = kernels::conv1d_backward(h1_, w2_.value, h2_, g, dilation_, Padding::causal,
                                                  Activation::relu, w2_.grad, b2_.grad);
  Tensor<T> g_x = kernels::conv1d_backward(x_, w1_.value, h1_, g_h1, dilation_, Padding::causal,
                                           Activation::relu, w1_.grad, b1_.grad);
  if (wd_) {
    // The downsample conv is linear, so its output is never consulted.
    const Tensor<T> g_res = kernels::conv1d_backward(x_, wd_->value, g, g, 1, Padding::causal,
                                                     Activation::linear, wd_->grad, bd_->grad);
    for (std::size_t i = 0; i < g_x.size(); ++i) g_x[i] += g_res[i];
  } else {
    for (std::size_t i = 0; i < g_x.size(); ++i) g_x[i] += g[i];
  }
  return g_x;
}

template <typename T>
void ResidualBlock<T>::collect_params(std::vector<ParamTensor<T>*>& out) {
  out.push_back(&w1_);
  out.push_back(&b1_);
  out.push_back(&w2_);
  out.push_back(&b2_);
  if (wd_) {
    out.push_back(wd_.get());
    out.push_back(bd_.get());
  }
}

template <typename T>
TcnLayer<T>::TcnLayer(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel,
                      const std::vector<std::size_t>& dilations, std::mt19937_64& init_rng)
    : filters_(filters), kernel_(kernel), dilations_(dilations) {
  if (dilations.empty()) throw ConfigError("TCN needs at least one dilation", name);
  std::size_t channels = in_channels;
  blocks_.reserve(dilations.size());
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    blocks_.emplace_back(name + ".block" + std::to_string(i), channels, filters, kernel, dilations[i],
                         init_rng);
    channels = filters;
  }
}

template <typename T>
Tensor<T> TcnLayer<T>::forward(const Tensor<T>& x, Mode, std::mt19937_64&) {
  Tensor<T> h = x;
  for (auto& block : blocks_) h = block.forward(h);
  return h;
}

template <typename T>
Tensor<T> TcnLayer<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
  return g;
}

template <typename T>
Shape TcnLayer<T>::output_shape(const Shape& in) const {
  return {in.at(0), filters_};
}

template <typename T>
void TcnLayer<T>::collect_params(std::vector<ParamTensor<T>*>& out) {
  for (auto& block : blocks_) block.collect_params(out);
}

template <typename T>
std::string TcnLayer<T>::describe() const {
  return "TCN(k=" + std::to_string(kernel_) + ",maps=" + std::to_string(filters_) + ",dilations=[" +
         join(dilations_) + "],causal,sequences)";
}

template class DenseLayer<float>;
template class DenseLayer<double>;
template class DropoutLayer<float>;
template class DropoutLayer<double>;
template class FlattenLayer<float>;
template class FlattenLayer<double>;
template class Conv1dLayer<float>;
template class Conv1dLayer<double>;
template class MaxPoolLayer<float>;
template class MaxPoolLayer<double>;
template class LstmLayer<float>;
template class LstmLayer<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;
template class TcnLayer<float>;
template class TcnLayer<double>;

}  // namespace adls
