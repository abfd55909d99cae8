#include "keynet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "keynet/error.hpp"

namespace keynet {

namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void expect_shape(const std::vector<std::size_t>& got,
                  const std::vector<std::size_t>& want, const std::string& what) {
  if (got != want) {
    throw ShapeError(what + ": expected shape " + shape_string(want) + ", got " +
                     shape_string(got));
  }
}

// Copy of a T x F x C map with `pad` zero rows and columns on every side.
template <class Real>
std::vector<Real> zero_pad(const Real* in, std::size_t frames, std::size_t bands,
                           std::size_t channels, std::size_t pad) {
  const std::size_t fp = bands + 2 * pad;
  std::vector<Real> out((frames + 2 * pad) * fp * channels, Real(0));
  for (std::size_t t = 0; t < frames; ++t) {
    std::copy(in + t * bands * channels, in + (t + 1) * bands * channels,
              out.data() + ((t + pad) * fp + pad) * channels);
  }
  return out;
}

// GCC/Clang vector extension holding all output channels of one position.
template <class Real, std::size_t kLanes>
struct Lanes {
  typedef Real type __attribute__((vector_size(kLanes * sizeof(Real))));
};

template <class V>
inline V load_lanes(const void* p) {
  V v;
  std::memcpy(&v, p, sizeof(V));
  return v;
}

template <class V>
inline void store_lanes(void* p, const V& v) {
  std::memcpy(p, &v, sizeof(V));
}

// kBlock consecutive output positions of one row, accumulated in registers.
// `padded` points at the top-left of the receptive field of the first one.
template <class Real, std::size_t kIn, std::size_t kOut, std::size_t kBlock>
inline void correlate_block(const Real* __restrict padded, std::size_t row_stride,
                            const Real* __restrict kernel, std::size_t ks,
                            Real* __restrict out) {
  using V = typename Lanes<Real, kOut>::type;
  V acc[kBlock];
  for (std::size_t b = 0; b < kBlock; ++b) acc[b] = load_lanes<V>(out + b * kOut);
  for (std::size_t dt = 0; dt < ks; ++dt) {
    const Real* prow = padded + dt * row_stride;
    for (std::size_t dw = 0; dw < ks; ++dw) {
      const Real* w = kernel + (dt * ks + dw) * kIn * kOut;
      const Real* x = prow + dw * kIn;
      for (std::size_t c = 0; c < kIn; ++c) {
        const V wv = load_lanes<V>(w + c * kOut);
        for (std::size_t b = 0; b < kBlock; ++b) acc[b] += x[b * kIn + c] * wv;
      }
    }
  }
  for (std::size_t b = 0; b < kBlock; ++b) store_lanes(out + b * kOut, acc[b]);
}

template <class Real, std::size_t kIn, std::size_t kOut>
void correlate_fixed(const Real* in, std::size_t frames, std::size_t bands,
                     const Real* kernel, std::size_t ks, Real* out) {
  constexpr std::size_t kBlock = 8;
  const std::size_t pad = ks / 2;
  const std::vector<Real> padded = zero_pad(in, frames, bands, kIn, pad);
  const std::size_t row_stride = (bands + 2 * pad) * kIn;
  for (std::size_t t = 0; t < frames; ++t) {
    const Real* prow = padded.data() + t * row_stride;
    Real* orow = out + t * bands * kOut;
    std::size_t f = 0;
    for (; f + kBlock <= bands; f += kBlock) {
      correlate_block<Real, kIn, kOut, kBlock>(prow + f * kIn, row_stride, kernel, ks,
                                               orow + f * kOut);
    }
    for (; f < bands; ++f) {
      correlate_block<Real, kIn, kOut, 1>(prow + f * kIn, row_stride, kernel, ks,
                                          orow + f * kOut);
    }
  }
}

// Reference path for channel counts without a specialisation.
template <class Real>
void correlate_generic(const Real* in, std::size_t frames, std::size_t bands, std::size_t cin,
                       const Real* kernel, std::size_t ks, std::size_t cout, Real* out) {
  const std::size_t pad = ks / 2;
  const std::vector<Real> padded = zero_pad(in, frames, bands, cin, pad);
  const std::size_t row_stride = (bands + 2 * pad) * cin;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < bands; ++f) {
      Real* o = out + (t * bands + f) * cout;
      for (std::size_t dt = 0; dt < ks; ++dt) {
        for (std::size_t dw = 0; dw < ks; ++dw) {
          const Real* x = padded.data() + (t + dt) * row_stride + (f + dw) * cin;
          const Real* w = kernel + (dt * ks + dw) * cin * cout;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t j = 0; j < cout; ++j) o[j] += x[c] * w[c * cout + j];
          }
        }
      }
    }
  }
}

// out(t, f, :) += correlation of `in` with `kernel`; `out` must already hold
// the bias (or zero).
template <class Real>
void correlate_dispatch(const Real* in, std::size_t frames, std::size_t bands,
                        std::size_t cin, const Real* kernel, std::size_t ks,
                        std::size_t cout, Real* out) {
  if (cin == 1 && cout == 8) {
    correlate_fixed<Real, 1, 8>(in, frames, bands, kernel, ks, out);
  } else if (cin == 8 && cout == 8) {
    correlate_fixed<Real, 8, 8>(in, frames, bands, kernel, ks, out);
  } else {
    correlate_generic(in, frames, bands, cin, kernel, ks, cout, out);
  }
}

// grad_kernel(dt, dw, c, o) += sum_{t,f} in(t+dt-p, f+dw-p, c) g(t, f, o).
// Per-row partial sums in Real, running totals in double.
template <class Real, std::size_t kIn, std::size_t kOut>
void kernel_gradient_fixed(const Real* padded, std::size_t row_stride, const Real* g,
                           std::size_t frames, std::size_t bands, std::size_t ks,
                           Real* grad_kernel) {
  using V = typename Lanes<Real, kOut>::type;
  // Enough independent accumulators to hide the FMA latency when kIn is small.
  constexpr std::size_t kUnroll = kIn >= 8 ? 1 : 8 / kIn;
  double total[kIn * kOut];
  for (std::size_t dt = 0; dt < ks; ++dt) {
    for (std::size_t dw = 0; dw < ks; ++dw) {
      std::fill(std::begin(total), std::end(total), 0.0);
      for (std::size_t t = 0; t < frames; ++t) {
        const Real* __restrict x = padded + (t + dt) * row_stride + dw * kIn;
        const Real* __restrict go = g + t * bands * kOut;
        V acc[kUnroll][kIn] = {};
        std::size_t f = 0;
        for (; f + kUnroll <= bands; f += kUnroll) {
          for (std::size_t u = 0; u < kUnroll; ++u) {
            const V gv = load_lanes<V>(go + (f + u) * kOut);
            for (std::size_t c = 0; c < kIn; ++c) acc[u][c] += x[(f + u) * kIn + c] * gv;
          }
        }
        for (; f < bands; ++f) {
          const V gv = load_lanes<V>(go + f * kOut);
          for (std::size_t c = 0; c < kIn; ++c) acc[0][c] += x[f * kIn + c] * gv;
        }
        for (std::size_t u = 1; u < kUnroll; ++u) {
          for (std::size_t c = 0; c < kIn; ++c) acc[0][c] += acc[u][c];
        }
        for (std::size_t c = 0; c < kIn; ++c) {
          for (std::size_t j = 0; j < kOut; ++j) total[c * kOut + j] += acc[0][c][j];
        }
      }
      Real* dst = grad_kernel + (dt * ks + dw) * kIn * kOut;
      for (std::size_t i = 0; i < kIn * kOut; ++i) dst[i] += static_cast<Real>(total[i]);
    }
  }
}

template <class Real>
void kernel_gradient_generic(const Real* padded, std::size_t row_stride, const Real* g,
                             std::size_t frames, std::size_t bands, std::size_t cin,
                             std::size_t ks, std::size_t cout, Real* grad_kernel) {
  std::vector<double> total(cin * cout);
  for (std::size_t dt = 0; dt < ks; ++dt) {
    for (std::size_t dw = 0; dw < ks; ++dw) {
      std::fill(total.begin(), total.end(), 0.0);
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t f = 0; f < bands; ++f) {
          const Real* x = padded + (t + dt) * row_stride + (f + dw) * cin;
          const Real* go = g + (t * bands + f) * cout;
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t j = 0; j < cout; ++j) total[c * cout + j] += x[c] * go[j];
          }
        }
      }
      Real* dst = grad_kernel + (dt * ks + dw) * cin * cout;
      for (std::size_t i = 0; i < cin * cout; ++i) dst[i] += static_cast<Real>(total[i]);
    }
  }
}

std::uint64_t splitmix(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void fill_uniform(Tensor& t, double limit, std::mt19937_64& rng) {
  for (float& v : t.values()) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    v = static_cast<float>((2.0 * u - 1.0) * limit);
  }
}

}  // namespace

template <class Real>
std::size_t BasicModelParams<Real>::bands() const {
  if (conv.empty() || dense_weight.rank() != 2) return 0;
  const std::size_t channels = conv.back().bias.size();
  return channels == 0 ? 0 : dense_weight.dim(0) / channels;
}

template <class Real>
Architecture BasicModelParams<Real>::architecture() const {
  Architecture a;
  a.conv_layers = conv.size();
  a.channels = conv.empty() ? 0 : conv.front().bias.size();
  a.kernel_size = conv.empty() ? 0 : conv.front().kernel.dim(0);
  a.dense_units = dense_bias.size();
  return a;
}

template <class Real>
std::vector<BasicTensor<Real>*> BasicModelParams<Real>::tensors() {
  std::vector<BasicTensor<Real>*> r;
  for (auto& c : conv) {
    r.push_back(&c.kernel);
    r.push_back(&c.bias);
  }
  r.insert(r.end(), {&dense_weight, &dense_bias, &out_weight, &out_bias});
  return r;
}

template <class Real>
std::vector<const BasicTensor<Real>*> BasicModelParams<Real>::tensors() const {
  std::vector<const BasicTensor<Real>*> r;
  for (const auto& c : conv) {
    r.push_back(&c.kernel);
    r.push_back(&c.bias);
  }
  r.insert(r.end(), {&dense_weight, &dense_bias, &out_weight, &out_bias});
  return r;
}

template <class Real>
std::vector<std::string> BasicModelParams<Real>::tensor_names() const {
  std::vector<std::string> r;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    r.push_back("conv" + std::to_string(i + 1) + ".kernel");
    r.push_back("conv" + std::to_string(i + 1) + ".bias");
  }
  r.insert(r.end(), {"dense.weight", "dense.bias", "out.weight", "out.bias"});
  return r;
}

template <class Real>
std::vector<bool> BasicModelParams<Real>::decayed_tensors() const {
  std::vector<bool> r;
  for (std::size_t i = 0; i < conv.size(); ++i) r.insert(r.end(), {true, false});
  r.insert(r.end(), {true, false, true, false});
  return r;
}

template <class Real>
std::size_t BasicModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

template <class Real>
void BasicModelParams<Real>::validate() const {
  if (conv.empty()) throw ShapeError("network has no convolutional layers");
  const std::size_t ks = conv.front().kernel.rank() == 4 ? conv.front().kernel.dim(0) : 0;
  if (ks == 0 || ks % 2 == 0) throw ShapeError("kernel size must be odd");
  std::size_t cin = 1;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const std::string name = "conv" + std::to_string(i + 1);
    if (conv[i].kernel.rank() != 4) throw ShapeError(name + ".kernel must be rank 4");
    const std::size_t cout = conv[i].kernel.dim(3);
    expect_shape(conv[i].kernel.shape(), {ks, ks, cin, cout}, name + ".kernel");
    expect_shape(conv[i].bias.shape(), {cout}, name + ".bias");
    cin = cout;
  }
  if (dense_weight.rank() != 2 || dense_weight.dim(0) % cin != 0 ||
      dense_weight.dim(0) == 0) {
    throw ShapeError("dense.weight must be (F * C) x units");
  }
  const std::size_t units = dense_weight.dim(1);
  expect_shape(dense_bias.shape(), {units}, "dense.bias");
  expect_shape(out_weight.shape(), {units, std::size_t{kNumKeyClasses}}, "out.weight");
  expect_shape(out_bias.shape(), {std::size_t{kNumKeyClasses}}, "out.bias");
  for (const auto* t : tensors()) {
    for (Real v : t->values()) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw NumericError("non-finite parameter value");
      }
    }
  }
}

template struct BasicModelParams<float>;
template struct BasicModelParams<double>;

ModelParams zero_params(std::size_t bands, const Architecture& arch) {
  if (bands == 0 || arch.conv_layers == 0 || arch.channels == 0 ||
      arch.dense_units == 0 || arch.kernel_size % 2 == 0) {
    throw InvalidArgument("invalid network architecture");
  }
  const std::size_t ks = arch.kernel_size;
  ModelParams p;
  std::size_t cin = 1;
  for (std::size_t i = 0; i < arch.conv_layers; ++i) {
    p.conv.push_back({Tensor({ks, ks, cin, arch.channels}), Tensor({arch.channels})});
    cin = arch.channels;
  }
  p.dense_weight = Tensor({bands * arch.channels, arch.dense_units});
  p.dense_bias = Tensor({arch.dense_units});
  p.out_weight = Tensor({arch.dense_units, std::size_t{kNumKeyClasses}});
  p.out_bias = Tensor({std::size_t{kNumKeyClasses}});
  return p;
}

ModelParams init_params(std::size_t bands, std::uint64_t seed,
                        const Architecture& arch) {
  ModelParams p = zero_params(bands, arch);
  std::uint64_t s = seed;
  std::mt19937_64 rng(splitmix(s));
  const double kk = static_cast<double>(arch.kernel_size * arch.kernel_size);
  for (auto& c : p.conv) {
    const double fan_in = kk * static_cast<double>(c.kernel.dim(2));
    const double fan_out = kk * static_cast<double>(c.kernel.dim(3));
    fill_uniform(c.kernel, std::sqrt(6.0 / (fan_in + fan_out)), rng);
  }
  auto dense_fan = static_cast<double>(p.dense_weight.dim(0) + p.dense_weight.dim(1));
  fill_uniform(p.dense_weight, std::sqrt(6.0 / dense_fan), rng);
  auto out_fan = static_cast<double>(p.out_weight.dim(0) + p.out_weight.dim(1));
  fill_uniform(p.out_weight, std::sqrt(6.0 / out_fan), rng);
  return p;
}

template <class Real>
BasicTensor<Real> elu(const BasicTensor<Real>& x) {
  BasicTensor<Real> y = x;
  for (Real& v : y.values()) {
    if (!(v > Real(0))) v = std::expm1(v);
  }
  return y;
}

template <class Real>
void elu_backward(const BasicTensor<Real>& activated, BasicTensor<Real>& grad) {
  if (activated.size() != grad.size()) throw ShapeError("elu_backward: size mismatch");
  const Real* y = activated.data();
  Real* g = grad.data();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    // exp(v) = f(v) + 1 on the negative branch.
    if (!(y[i] > Real(0))) g[i] *= y[i] + Real(1);
  }
}

template <class Real>
BasicTensor<Real> conv2d_same(const BasicTensor<Real>& input,
                              const BasicTensor<Real>& kernel,
                              const BasicTensor<Real>& bias) {
  if (input.rank() != 3) throw ShapeError("conv2d_same: input must be T x F x C");
  if (kernel.rank() != 4 || kernel.dim(0) != kernel.dim(1) || kernel.dim(0) % 2 == 0) {
    throw ShapeError("conv2d_same: kernel must be k x k x C_in x C_out with odd k");
  }
  const std::size_t T = input.dim(0), F = input.dim(1), cin = input.dim(2);
  const std::size_t ks = kernel.dim(0), cout = kernel.dim(3);
  if (kernel.dim(2) != cin) {
    throw ShapeError("conv2d_same: kernel has " + std::to_string(kernel.dim(2)) +
                     " input channels, input has " + std::to_string(cin));
  }
  expect_shape(bias.shape(), {cout}, "conv2d_same bias");
  BasicTensor<Real> out({T, F, cout});
  Real* o = out.data();
  for (std::size_t i = 0; i < T * F; ++i) {
    std::copy(bias.data(), bias.data() + cout, o + i * cout);
  }
  correlate_dispatch(input.data(), T, F, cin, kernel.data(), ks, cout, o);
  return out;
}

template <class Real>
BasicTensor<Real> conv2d_backward_input(const BasicTensor<Real>& grad_output,
                                        const BasicTensor<Real>& kernel) {
  const std::size_t T = grad_output.dim(0), F = grad_output.dim(1);
  const std::size_t ks = kernel.dim(0), cin = kernel.dim(2), cout = kernel.dim(3);
  // Correlating with the spatially flipped, channel-transposed kernel.
  BasicTensor<Real> flipped({ks, ks, cout, cin});
  for (std::size_t a = 0; a < ks; ++a) {
    for (std::size_t b = 0; b < ks; ++b) {
      const Real* src = kernel.data() + ((ks - 1 - a) * ks + (ks - 1 - b)) * cin * cout;
      Real* dst = flipped.data() + (a * ks + b) * cout * cin;
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t o = 0; o < cout; ++o) dst[o * cin + c] = src[c * cout + o];
      }
    }
  }
  BasicTensor<Real> grad_input({T, F, cin});
  correlate_dispatch(grad_output.data(), T, F, cout, flipped.data(), ks, cin,
                     grad_input.data());
  return grad_input;
}

template <class Real>
void conv2d_backward_params(const BasicTensor<Real>& input,
                            const BasicTensor<Real>& grad_output,
                            ConvParams<Real>& grad) {
  const std::size_t T = input.dim(0), F = input.dim(1), cin = input.dim(2);
  const std::size_t ks = grad.kernel.dim(0), cout = grad.kernel.dim(3);
  const std::size_t pad = ks / 2;
  const std::vector<Real> padded = zero_pad(input.data(), T, F, cin, pad);
  const std::size_t row_stride = (F + 2 * pad) * cin;
  if (cin == 1 && cout == 8) {
    kernel_gradient_fixed<Real, 1, 8>(padded.data(), row_stride, grad_output.data(), T, F, ks,
                                      grad.kernel.data());
  } else if (cin == 8 && cout == 8) {
    kernel_gradient_fixed<Real, 8, 8>(padded.data(), row_stride, grad_output.data(), T, F, ks,
                                      grad.kernel.data());
  } else {
    kernel_gradient_generic(padded.data(), row_stride, grad_output.data(), T, F, cin, ks, cout,
                            grad.kernel.data());
  }
  std::vector<double> bias(cout, 0.0);
  const Real* g = grad_output.data();
  for (std::size_t i = 0; i < T * F; ++i) {
    for (std::size_t o = 0; o < cout; ++o) bias[o] += g[i * cout + o];
  }
  for (std::size_t o = 0; o < cout; ++o) grad.bias[o] += static_cast<Real>(bias[o]);
}

template <class Real>
BasicTensor<Real> dense_per_frame(const BasicTensor<Real>& input,
                                  const BasicTensor<Real>& weight,
                                  const BasicTensor<Real>& bias) {
  if (input.rank() != 3) throw ShapeError("dense_per_frame: input must be T x F x C");
  if (weight.rank() != 2) throw ShapeError("dense_per_frame: weight must be a matrix");
  const std::size_t T = input.dim(0);
  const std::size_t in_dim = input.dim(1) * input.dim(2);
  const std::size_t units = weight.dim(1);
  if (weight.dim(0) != in_dim) {
    throw ShapeError("dense_per_frame: weight expects " + std::to_string(weight.dim(0)) +
                     " inputs per frame, got " + std::to_string(in_dim));
  }
  expect_shape(bias.shape(), {units}, "dense_per_frame bias");
  BasicTensor<Real> out({T, units});
  for (std::size_t t = 0; t < T; ++t) {
    Real* o = out.data() + t * units;
    std::copy(bias.data(), bias.data() + units, o);
    const Real* x = input.data() + t * in_dim;
    std::vector<Real> acc(o, o + units);
    Real* __restrict a = acc.data();
    for (std::size_t i = 0; i < in_dim; ++i) {
      const Real xv = x[i];
      const Real* __restrict w = weight.data() + i * units;
      for (std::size_t u = 0; u < units; ++u) a[u] += xv * w[u];
    }
    std::copy(acc.begin(), acc.end(), o);
  }
  return out;
}

template <class Real>
BasicTensor<Real> temporal_average(const BasicTensor<Real>& input) {
  if (input.rank() != 2) throw ShapeError("temporal_average: input must be T x U");
  const std::size_t T = input.dim(0), U = input.dim(1);
  if (T == 0) throw ShapeError("temporal_average: no frames");
  std::vector<double> acc(U, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < U; ++u) acc[u] += input[t * U + u];
  }
  BasicTensor<Real> out({U});
  for (std::size_t u = 0; u < U; ++u) {
    out[u] = static_cast<Real>(acc[u] / static_cast<double>(T));
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

template <class Real>
BasicTensor<Real> spec_to_tensor(const LogFiltSpec& spec) {
  return BasicTensor<Real>({spec.frames, spec.bands, 1},
                           std::vector<Real>(spec.values.begin(), spec.values.end()));
}

template <class Real>
ForwardTrace<Real> forward_trace(const LogFiltSpec& spec,
                                 const BasicModelParams<Real>& params) {
  if (spec.frames == 0) throw ShapeError("forward: spectrogram has no frames");
  if (spec.bands != params.bands()) {
    throw ShapeError("forward: spectrogram has " + std::to_string(spec.bands) +
                     " bands, model expects " + std::to_string(params.bands()));
  }
  ForwardTrace<Real> tr;
  tr.input = spec_to_tensor<Real>(spec);
  const BasicTensor<Real>* x = &tr.input;
  for (const auto& layer : params.conv) {
    tr.conv_out.push_back(elu(conv2d_same(*x, layer.kernel, layer.bias)));
    x = &tr.conv_out.back();
  }
  tr.dense_out = elu(dense_per_frame(*x, params.dense_weight, params.dense_bias));
  tr.pooled = temporal_average(tr.dense_out);

  const std::size_t U = tr.pooled.size();
  tr.logits.assign(kNumKeyClasses, 0.0);
  for (int k = 0; k < kNumKeyClasses; ++k) {
    double acc = params.out_bias[static_cast<std::size_t>(k)];
    for (std::size_t u = 0; u < U; ++u) {
      acc += static_cast<double>(tr.pooled[u]) *
             params.out_weight[u * kNumKeyClasses + static_cast<std::size_t>(k)];
    }
    tr.logits[static_cast<std::size_t>(k)] = acc;
  }
  tr.probs = softmax(tr.logits);
  return tr;
}

std::vector<double> forward(const LogFiltSpec& spec, const ModelParams& params) {
  return forward_trace(spec, params).probs;
}

KeyLabel argmax_key(std::span<const double> probs) {
  if (probs.size() != kNumKeyClasses) {
    throw ShapeError("argmax_key: expected 24 probabilities");
  }
  // max_element returns the first maximum, i.e. the lowest index on ties.
  auto it = std::max_element(probs.begin(), probs.end());
  return KeyLabel::from_class_index(static_cast<int>(it - probs.begin()));
}

KeyLabel predict_key(const LogFiltSpec& spec, const ModelParams& params) {
  return argmax_key(forward(spec, params));
}

#define KEYNET_INSTANTIATE(Real)                                               \
  template BasicTensor<Real> elu(const BasicTensor<Real>&);                    \
  template void elu_backward(const BasicTensor<Real>&, BasicTensor<Real>&);    \
  template BasicTensor<Real> conv2d_same(const BasicTensor<Real>&,             \
                                         const BasicTensor<Real>&,             \
                                         const BasicTensor<Real>&);            \
  template BasicTensor<Real> conv2d_backward_input(const BasicTensor<Real>&,   \
                                                   const BasicTensor<Real>&);  \
  template void conv2d_backward_params(const BasicTensor<Real>&,               \
                                       const BasicTensor<Real>&,               \
                                       ConvParams<Real>&);                     \
  template BasicTensor<Real> dense_per_frame(const BasicTensor<Real>&,         \
                                             const BasicTensor<Real>&,         \
                                             const BasicTensor<Real>&);        \
  template BasicTensor<Real> temporal_average(const BasicTensor<Real>&);       \
  template BasicTensor<Real> spec_to_tensor<Real>(const LogFiltSpec&);         \
  template ForwardTrace<Real> forward_trace(const LogFiltSpec&,                \
                                            const BasicModelParams<Real>&);

KEYNET_INSTANTIATE(float)
KEYNET_INSTANTIATE(double)

#undef KEYNET_INSTANTIATE

}  // namespace keynet
