#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "adls/kernels.hpp"
#include "adls/tensor.hpp"

namespace adls {

// A layer caches whatever its backward pass needs during forward, so a
// forward/backward pair must run on the same sample before the next forward.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual void collect_params(std::vector<ParamTensor<T>*>& /*out*/) {}

  virtual std::string describe() const = 0;
  // False for structural glue (dropout, flatten) that has no row of its own
  // in an architecture table.
  virtual bool is_table_row() const { return true; }
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  DenseLayer(std::string name, std::size_t in, std::size_t out, kernels::Activation act,
             std::mt19937_64& init_rng, bool is_output = false);

  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_params(std::vector<ParamTensor<T>*>& out) override;
  std::string describe() const override;

 private:
  ParamTensor<T> w_;
  ParamTensor<T> b_;
  kernels::Activation act_;
  bool is_output_;
  Tensor<T> x_, out_;
};

template <typename T>
class DropoutLayer final : public Layer<T> {
 public:
  explicit DropoutLayer(double rate);

  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::string describe() const override;
  bool is_table_row() const override { return false; }

 private:
  double rate_;
  Tensor<T> mask_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override { return {shape_product(in)}; }
  std::string describe() const override { return "Flatten"; }
  bool is_table_row() const override { return false; }

 private:
  Shape in_shape_;
};

template <typename T>
class Conv1dLayer final : public Layer<T> {
 public:
  Conv1dLayer(std::string name, std::size_t kernel, std::size_t in_channels,
              std::size_t out_channels, std::size_t dilation, kernels::Padding padding,
              kernels::Activation act, std::mt19937_64& init_rng);

  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_params(std::vector<ParamTensor<T>*>& out) override;
  std::string describe() const override;

 private:
  ParamTensor<T> w_;
  ParamTensor<T> b_;
  std::size_t dilation_;
  kernels::Padding padding_;
  kernels::Activation act_;
  Tensor<T> x_, out_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  MaxPoolLayer(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride) {}

  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::string describe() const override;

 private:
  std::size_t kernel_, stride_;
  std::size_t channels_ = 0;
  kernels::PoolIndex index_;
};

// Returns the full hidden-state sequence.
template <typename T>
class LstmLayer final : public Layer<T> {
 public:
  LstmLayer(std::string name, std::size_t in_channels, std::size_t units, std::mt19937_64& init_rng);

  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_params(std::vector<ParamTensor<T>*>& out) override;
  std::string describe() const override;

 private:
  ParamTensor<T> w_x_, w_h_, b_;
  Tensor<T> x_;
  kernels::LstmCache<T> cache_;
};

// relu(relu(conv2(relu(conv1(x)))) + residual(x)), both convs causal and
// dilated; residual is a 1x1 convolution when channel counts differ.
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel,
                std::size_t dilation, std::mt19937_64& init_rng);

  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void collect_params(std::vector<ParamTensor<T>*>& out);
  std::size_t convolutions() const { return 2; }

 private:
  ParamTensor<T> w1_, b1_, w2_, b2_;
  std::unique_ptr<ParamTensor<T>> wd_, bd_;
  std::size_t dilation_;
  Tensor<T> x_, h1_, h2_, out_;
};

// One stack of residual blocks, one block per dilation, full sequence out.
template <typename T>
class TcnLayer final : public Layer<T> {
 public:
  TcnLayer(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel,
           const std::vector<std::size_t>& dilations, std::mt19937_64& init_rng);

  Tensor<T> forward(const Tensor<T>& x, kernels::Mode mode, std::mt19937_64& rng) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  void collect_params(std::vector<ParamTensor<T>*>& out) override;
  std::string describe() const override;

 private:
  std::size_t filters_, kernel_;
  std::vector<std::size_t> dilations_;
  std::vector<ResidualBlock<T>> blocks_;
};

}  // namespace adls
