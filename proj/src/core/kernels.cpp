#include "adls/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adls {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::input: return "input";
    case ErrorKind::format: return "format";
    case ErrorKind::training: return "training";
    case ErrorKind::state: return "state";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace adls

namespace adls::kernels {

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }
const char* to_string(Padding p) { return p == Padding::same ? "same" : "causal"; }

namespace {

template <typename T>
void apply_activation(Tensor<T>& t, Activation act) {
  if (act == Activation::relu) {
    for (T& v : t.values()) v = v > T{0} ? v : T{0};
  }
}

// grad through the activation, using the post-activation output.
template <typename T>
Tensor<T> activation_grad(const Tensor<T>& out, const Tensor<T>& grad_out, Activation act) {
  Tensor<T> g = grad_out;
  if (act == Activation::relu) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(out[i] > T{0})) g[i] = T{0};
    }
  }
  return g;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <typename T>
T sigmoid(T z) {
  return T{1} / (T{1} + std::exp(-z));
}

// Offset of tap j relative to the output position.
std::ptrdiff_t tap_offset(std::size_t j, std::size_t k, std::size_t dilation, Padding padding) {
  const auto span = static_cast<std::ptrdiff_t>(dilation * (k - 1));
  const auto pos = static_cast<std::ptrdiff_t>(j * dilation);
  if (padding == Padding::causal) return pos - span;
  return pos - span / 2;
}

struct TapRange {
  std::size_t out_begin = 0;
  std::size_t count = 0;
  std::size_t in_begin = 0;
};

TapRange tap_range(std::ptrdiff_t offset, std::size_t length) {
  const auto L = static_cast<std::ptrdiff_t>(length);
  const std::ptrdiff_t begin = std::max<std::ptrdiff_t>(0, -offset);
  const std::ptrdiff_t end = std::min<std::ptrdiff_t>(L, L - offset);
  if (end <= begin) return {};
  return {static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin),
          static_cast<std::size_t>(begin + offset)};
}

void check_conv_shapes(const Shape& x, const Shape& w, const Shape& b, std::size_t dilation) {
  require(dilation >= 1, "conv1d dilation must be positive");
  require(x.size() == 2, "conv1d input must be [L x C_in], got " + shape_string(x));
  require(w.size() == 3, "conv1d kernel must be [k x C_in x C_out], got " + shape_string(w));
  require(w[1] == x[1], "conv1d kernel C_in " + std::to_string(w[1]) + " != input channels " +
                            std::to_string(x[1]));
  require(b.size() == 1 && b[0] == w[2], "conv1d bias must have C_out elements");
}

}  // namespace

// ---- dense ---------------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Activation act) {
  require(w.rank() == 2, "dense weights must be rank 2, got " + shape_string(w.shape()));
  require(x.size() == w.dim(0), "dense input length " + std::to_string(x.size()) +
                                    " does not match weight rows " + std::to_string(w.dim(0)));
  require(b.size() == w.dim(1), "dense bias length does not match output width");
  Tensor<T> out({w.dim(1)});
  auto y = as_matrix(out);
  y.noalias() = as_matrix(x.data(), 1, x.size()) * as_matrix(w);
  y += as_matrix(b);
  apply_activation(out, act);
  return out;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& out,
                         const Tensor<T>& grad_out, Activation act, Tensor<T>& grad_w,
                         Tensor<T>& grad_b) {
  const Tensor<T> g = activation_grad(out, grad_out, act);
  const auto gm = as_matrix(g.data(), 1, g.size());
  const auto xm = as_matrix(x.data(), 1, x.size());
  as_matrix(grad_w).noalias() += xm.transpose() * gm;
  as_matrix(grad_b) += gm;
  Tensor<T> grad_x(x.shape());
  as_matrix(grad_x.data(), 1, grad_x.size()).noalias() = gm * as_matrix(w).transpose();
  return grad_x;
}

// ---- conv1d --------------------------------------------------------------

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::size_t dilation, Padding padding, Activation act) {
  check_conv_shapes(x.shape(), w.shape(), b.shape(), dilation);
  const std::size_t L = x.dim(0), cin = x.dim(1), k = w.dim(0), cout = w.dim(2);
  Tensor<T> out({L, cout});
  auto y = as_matrix(out);
  y.rowwise() = as_matrix(b).row(0);
  const auto xm = as_matrix(x);
  for (std::size_t j = 0; j < k; ++j) {
    const TapRange r = tap_range(tap_offset(j, k, dilation, padding), L);
    if (r.count == 0) continue;
    const auto wj = as_matrix(w.data() + j * cin * cout, cin, cout);
    y.middleRows(r.out_begin, r.count).noalias() += xm.middleRows(r.in_begin, r.count) * wj;
  }
  apply_activation(out, act);
  return out;
}

template <typename T>
Tensor<T> conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& out,
                          const Tensor<T>& grad_out, std::size_t dilation, Padding padding,
                          Activation act, Tensor<T>& grad_w, Tensor<T>& grad_b) {
  const std::size_t L = x.dim(0), cin = x.dim(1), k = w.dim(0), cout = w.dim(2);
  const Tensor<T> g = activation_grad(out, grad_out, act);
  const auto gm = as_matrix(g);
  const auto xm = as_matrix(x);
  Tensor<T> grad_x(x.shape());
  auto gx = as_matrix(grad_x);
  as_matrix(grad_b) += gm.colwise().sum();
  for (std::size_t j = 0; j < k; ++j) {
    const TapRange r = tap_range(tap_offset(j, k, dilation, padding), L);
    if (r.count == 0) continue;
    const auto wj = as_matrix(w.data() + j * cin * cout, cin, cout);
    auto gwj = as_matrix(grad_w.data() + j * cin * cout, cin, cout);
    gwj.noalias() += xm.middleRows(r.in_begin, r.count).transpose() * gm.middleRows(r.out_begin, r.count);
    gx.middleRows(r.in_begin, r.count).noalias() += gm.middleRows(r.out_begin, r.count) * wj.transpose();
  }
  return grad_x;
}

// ---- max pool ------------------------------------------------------------

std::size_t pooled_length(std::size_t length, std::size_t stride) {
  return (length + stride - 1) / stride;
}

template <typename T>
Tensor<T> max_pool1d_forward(const Tensor<T>& x, std::size_t k, std::size_t stride, PoolIndex* index) {
  require(k >= 1 && stride >= 1, "max_pool1d needs k >= 1 and stride >= 1");
  require(x.rank() == 2, "max_pool1d input must be [L x C], got " + shape_string(x.shape()));
  const std::size_t L = x.dim(0), C = x.dim(1);
  const std::size_t out_len = pooled_length(L, stride);
  Tensor<T> out({out_len, C});
  if (index) {
    index->argmax.assign(out_len * C, 0);
    index->input_length = L;
  }
  for (std::size_t t = 0; t < out_len; ++t) {
    const std::size_t begin = t * stride;
    const std::size_t end = std::min(begin + k, L);
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = begin;
      for (std::size_t s = begin + 1; s < end; ++s) {
        if (x(s, c) > x(best, c)) best = s;
      }
      out(t, c) = x(best, c);
      if (index) index->argmax[t * C + c] = best * C + c;
    }
  }
  return out;
}

template <typename T>
Tensor<T> max_pool1d_backward(const Tensor<T>& grad_out, const PoolIndex& index, std::size_t channels) {
  Tensor<T> grad_x({index.input_length, channels});
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_x[index.argmax[i]] += grad_out[i];
  return grad_x;
}

// ---- LSTM ----------------------------------------------------------------

template <typename T>
Tensor<T> lstm_forward(const Tensor<T>& x, const Tensor<T>& w_x, const Tensor<T>& w_h,
                       const Tensor<T>& b, LstmCache<T>* cache) {
  require(x.rank() == 2, "lstm input must be [T x C_in], got " + shape_string(x.shape()));
  require(w_x.rank() == 2 && w_x.dim(0) == x.dim(1), "lstm input weights must be [C_in x 4H]");
  const std::size_t steps = x.dim(0), H = w_h.dim(0);
  require(w_x.dim(1) == 4 * H && w_h.dim(1) == 4 * H && b.size() == 4 * H,
          "lstm gate weights must have 4H columns");

  Tensor<T> gates({steps, 4 * H});
  Tensor<T> cells({steps, H});
  Tensor<T> cell_tanh({steps, H});
  Tensor<T> hidden({steps, H});

  auto z = as_matrix(gates);
  z.noalias() = as_matrix(x) * as_matrix(w_x);
  z.rowwise() += as_matrix(b).row(0);
  const auto wh = as_matrix(w_h);

  auto c_all = as_matrix(cells);
  auto tc_all = as_matrix(cell_tanh);
  auto h_all = as_matrix(hidden);
  const auto n = static_cast<Eigen::Index>(H);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto r = static_cast<Eigen::Index>(t);
    if (t > 0) z.row(r).noalias() += h_all.row(r - 1) * wh;
    auto zr = z.row(r).array();
    zr.head(2 * n) = zr.head(2 * n).logistic();
    zr.segment(2 * n, n) = zr.segment(2 * n, n).tanh();
    zr.tail(n) = zr.tail(n).logistic();
    if (t > 0) {
      c_all.row(r).array() = zr.segment(n, n) * c_all.row(r - 1).array() + zr.head(n) * zr.segment(2 * n, n);
    } else {
      c_all.row(r).array() = zr.head(n) * zr.segment(2 * n, n);
    }
    tc_all.row(r).array() = c_all.row(r).array().tanh();
    h_all.row(r).array() = zr.tail(n) * tc_all.row(r).array();
  }
  Tensor<T> out = hidden;
  if (cache) {
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->cell_tanh = std::move(cell_tanh);
    cache->hidden = std::move(hidden);
  }
  return out;
}

template <typename T>
Tensor<T> lstm_backward(const Tensor<T>& x, const Tensor<T>& w_x, const Tensor<T>& w_h,
                        const LstmCache<T>& cache, const Tensor<T>& grad_hidden,
                        Tensor<T>& grad_w_x, Tensor<T>& grad_w_h, Tensor<T>& grad_b) {
  const std::size_t steps = x.dim(0), H = w_h.dim(0);
  Tensor<T> dz({steps, 4 * H});
  auto dzm = as_matrix(dz);
  const auto wh = as_matrix(w_h);
  RowVector<T> dh_next = RowVector<T>::Zero(static_cast<Eigen::Index>(H));
  std::vector<T> dc_next(H, T{0});

  for (std::size_t step = steps; step-- > 0;) {
    const T* g = cache.gates.data() + step * 4 * H;
    T* d = dz.data() + step * 4 * H;
    for (std::size_t u = 0; u < H; ++u) {
      const T i = g[u], f = g[H + u], c_hat = g[2 * H + u], o = g[3 * H + u];
      const T tc = cache.cell_tanh(step, u);
      const T dh = grad_hidden(step, u) + dh_next[static_cast<Eigen::Index>(u)];
      const T dc = dh * o * (T{1} - tc * tc) + dc_next[u];
      const T prev_c = step > 0 ? cache.cells(step - 1, u) : T{0};
      d[u] = dc * c_hat * i * (T{1} - i);
      d[H + u] = dc * prev_c * f * (T{1} - f);
      d[2 * H + u] = dc * i * (T{1} - c_hat * c_hat);
      d[3 * H + u] = dh * tc * o * (T{1} - o);
      dc_next[u] = dc * f;
    }
    dh_next.noalias() = dzm.row(step) * wh.transpose();
  }

  as_matrix(grad_w_x).noalias() += as_matrix(x).transpose() * dzm;
  if (steps > 1) {
    as_matrix(grad_w_h).noalias() +=
        as_matrix(cache.hidden).topRows(steps - 1).transpose() * dzm.bottomRows(steps - 1);
  }
  as_matrix(grad_b) += dzm.colwise().sum();

  Tensor<T> grad_x(x.shape());
  as_matrix(grad_x).noalias() = dzm * as_matrix(w_x).transpose();
  return grad_x;
}

// ---- softmax / loss ------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p = logits;
  const T peak = *std::max_element(p.values().begin(), p.values().end());
  T sum{0};
  for (T& v : p.values()) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (T& v : p.values()) v /= sum;
  return p;
}

template <typename T>
SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw InputError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const T peak = *std::max_element(logits.values().begin(), logits.values().end());
  T sum{0};
  for (T v : logits.values()) sum += std::exp(v - peak);
  const T log_sum = std::log(sum);
  SoftmaxLoss<T> result{-(logits[label] - peak - log_sum), softmax(logits), Tensor<T>{}};
  result.grad = result.probabilities;
  result.grad[label] -= T{1};
  return result;
}

// ---- dropout -------------------------------------------------------------

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, std::mt19937_64& rng, Tensor<T>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) {
    if (mask) *mask = Tensor<T>(x.shape(), T{1});
    return x;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> m(x.shape());
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = uniform01(rng) < rate ? T{0} : keep_scale;
    y[i] = x[i] * m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

#define ADLS_INSTANTIATE_KERNELS(T)                                                                 \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Activation); \
  template Tensor<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                    const Tensor<T>&, Activation, Tensor<T>&, Tensor<T>&);             \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                    std::size_t, Padding, Activation);                                 \
  template Tensor<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                     const Tensor<T>&, std::size_t, Padding, Activation, Tensor<T>&,   \
                                     Tensor<T>&);                                                      \
  template Tensor<T> max_pool1d_forward(const Tensor<T>&, std::size_t, std::size_t, PoolIndex*);       \
  template Tensor<T> max_pool1d_backward(const Tensor<T>&, const PoolIndex&, std::size_t);             \
  template Tensor<T> lstm_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                  const Tensor<T>&, LstmCache<T>*);                                    \
  template Tensor<T> lstm_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                   const LstmCache<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&,      \
                                   Tensor<T>&);                                                        \
  template Tensor<T> softmax(const Tensor<T>&);                                                        \
  template SoftmaxLoss<T> softmax_cross_entropy(const Tensor<T>&, std::size_t);                        \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, std::mt19937_64&, Tensor<T>*);

ADLS_INSTANTIATE_KERNELS(float)
ADLS_INSTANTIATE_KERNELS(double)

#undef ADLS_INSTANTIATE_KERNELS

}  // namespace adls::kernels
