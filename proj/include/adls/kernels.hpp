#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "adls/tensor.hpp"

// Layer kernels with hand-derived gradients. Backward functions accumulate
// into the supplied parameter gradients and return the input gradient.
namespace adls::kernels {

enum class Activation { linear, relu };
enum class Padding { same, causal };
enum class Mode { train, infer };

const char* to_string(Activation a);
const char* to_string(Padding p);

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---- dense ---------------------------------------------------------------

// out[j] = act(sum_i x[i] * w[i, j] + b[j]); x: [n_in], w: [n_in x n_out], b: [n_out]
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                        Activation act = Activation::relu);

// `out` is the value returned by dense_forward.
template <typename T>
Tensor<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& out,
                         const Tensor<T>& grad_out, Activation act, Tensor<T>& grad_w,
                         Tensor<T>& grad_b);

// ---- conv1d --------------------------------------------------------------

// x: [L x C_in], w: [k x C_in x C_out], b: [C_out]; output keeps length L.
// Same padding puts floor(d(k-1)/2) zeros on the left, causal puts all d(k-1)
// zeros on the left so output t sees only inputs <= t.
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::size_t dilation, Padding padding,
                         Activation act = Activation::linear);

template <typename T>
Tensor<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& out,
                          const Tensor<T>& grad_out, std::size_t dilation, Padding padding,
                          Activation act, Tensor<T>& grad_w, Tensor<T>& grad_b);

// ---- max pool ------------------------------------------------------------

struct PoolIndex {
  std::vector<std::size_t> argmax;  // flat input offset per output element
  std::size_t input_length = 0;
};

std::size_t pooled_length(std::size_t length, std::size_t stride);

// x: [L x C] -> [ceil(L / stride) x C]; the last window may be truncated.
// Ties resolve to the lowest time index.
template <typename T>
Tensor<T> max_pool1d_forward(const Tensor<T>& x, std::size_t k, std::size_t stride,
                             PoolIndex* index = nullptr);

template <typename T>
Tensor<T> max_pool1d_backward(const Tensor<T>& grad_out, const PoolIndex& index,
                              std::size_t channels);

// ---- LSTM ----------------------------------------------------------------

// Gate blocks are laid out [input | forget | candidate | output] along the 4H axis.
template <typename T>
struct LstmCache {
  Tensor<T> gates;      // [T x 4H], post-nonlinearity
  Tensor<T> cells;      // [T x H]
  Tensor<T> cell_tanh;  // [T x H]
  Tensor<T> hidden;     // [T x H]
};

// x: [T x C_in], w_x: [C_in x 4H], w_h: [H x 4H], b: [4H] -> [T x H].
// Initial hidden and cell states are zero.
template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const Tensor<T>& w_x, const Tensor<T>& w_h,
                       const Tensor<T>& b, LstmCache<T>* cache = nullptr);

template <typename T>
Tensor<T> lstm_backward(const Tensor<T>& x, const Tensor<T>& w_x, const Tensor<T>& w_h,
                        const LstmCache<T>& cache, const Tensor<T>& grad_hidden,
                        Tensor<T>& grad_w_x, Tensor<T>& grad_w_h, Tensor<T>& grad_b);

// ---- softmax / loss ------------------------------------------------------

template <typename T>
struct SoftmaxLoss {
  T loss;
  Tensor<T> probabilities;
  Tensor<T> grad;  // d loss / d logits = p - onehot(label)
};

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t label);

// ---- dropout -------------------------------------------------------------

// Inverted dropout. `mask`, when given, receives the per-element multiplier.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, std::mt19937_64& rng,
                  Tensor<T>* mask = nullptr);

}  // namespace adls::kernels
