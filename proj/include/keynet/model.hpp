#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "keynet/key_label.hpp"
#include "keynet/spectral.hpp"
#include "keynet/tensor.hpp"

namespace keynet {

/// Network hyper-parameters. The defaults give five 5x5 convolutions with
/// 8 maps, a 48-unit frame-wise projection and a 24-way output.
struct Architecture {
  std::size_t conv_layers = 5;
  std::size_t channels = 8;
  std::size_t kernel_size = 5;
  std::size_t dense_units = 48;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

template <class Real>
struct ConvParams {
  BasicTensor<Real> kernel;  // kernel_size x kernel_size x C_in x C_out
  BasicTensor<Real> bias;    // C_out

  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

/// Every learnable tensor of the network. Gradients use the same type.
///
/// The frame-wise dense layer sees each frame's F x C feature maps flattened
/// band-major then channel: input index = band * C + channel.
template <class Real>
struct BasicModelParams {
  std::vector<ConvParams<Real>> conv;
  BasicTensor<Real> dense_weight;  // (F * C) x units
  BasicTensor<Real> dense_bias;    // units
  BasicTensor<Real> out_weight;    // units x 24
  BasicTensor<Real> out_bias;      // 24

  std::size_t bands() const;
  Architecture architecture() const;

  /// Tensors in checkpoint order: conv1 kernel, conv1 bias, ..., dense
  /// weight, dense bias, out weight, out bias.
  std::vector<BasicTensor<Real>*> tensors();
  std::vector<const BasicTensor<Real>*> tensors() const;
  /// Names parallel to tensors(), e.g. "conv2.kernel", "dense.bias".
  std::vector<std::string> tensor_names() const;
  /// Parallel to tensors(); true for kernels and weight matrices.
  std::vector<bool> decayed_tensors() const;

  std::size_t parameter_count() const;

  /// Throws ShapeError if the tensors do not form a consistent network.
  void validate() const;

  template <class Other>
  BasicModelParams<Other> cast() const {
    BasicModelParams<Other> r;
    for (const auto& c : conv) {
      r.conv.push_back({c.kernel.template cast<Other>(), c.bias.template cast<Other>()});
    }
    r.dense_weight = dense_weight.template cast<Other>();
    r.dense_bias = dense_bias.template cast<Other>();
    r.out_weight = out_weight.template cast<Other>();
    r.out_bias = out_bias.template cast<Other>();
    return r;
  }

  friend bool operator==(const BasicModelParams&, const BasicModelParams&) = default;
};

using ModelParams = BasicModelParams<float>;

/// All-zero parameters for a network over `bands` input bands.
ModelParams zero_params(std::size_t bands, const Architecture& arch = {});

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
ModelParams init_params(std::size_t bands, std::uint64_t seed,
                        const Architecture& arch = {});

// Layer operations. Feature maps are rank-3 T x F x C tensors.

/// f(v) = v for v > 0, exp(v) - 1 otherwise.
template <class Real>
BasicTensor<Real> elu(const BasicTensor<Real>& x);

/// Zero-padded cross-correlation that keeps the T x F shape.
/// Throws ShapeError on channel mismatch or an even kernel size.
template <class Real>
BasicTensor<Real> conv2d_same(const BasicTensor<Real>& input,
                              const BasicTensor<Real>& kernel,
                              const BasicTensor<Real>& bias);

/// Affine map applied to each frame's flattened F x C slice; returns
/// T x units.
template <class Real>
BasicTensor<Real> dense_per_frame(const BasicTensor<Real>& input,
                                  const BasicTensor<Real>& weight,
                                  const BasicTensor<Real>& bias);

/// Mean over the first axis of a T x U tensor. Throws ShapeError for T = 0.
template <class Real>
BasicTensor<Real> temporal_average(const BasicTensor<Real>& input);

std::vector<double> softmax(std::span<const double> logits);

/// Activations kept for back-propagation. Every stored activation is
/// post-ELU, which is enough to recover the ELU derivative.
template <class Real>
struct ForwardTrace {
  BasicTensor<Real> input;                 // T x F x 1
  std::vector<BasicTensor<Real>> conv_out;  // T x F x C per layer
  BasicTensor<Real> dense_out;             // T x units
  BasicTensor<Real> pooled;                // units
  std::vector<double> logits;
  std::vector<double> probs;
};

template <class Real>
BasicTensor<Real> spec_to_tensor(const LogFiltSpec& spec);

/// Throws ShapeError if the spectrogram's band count differs from the
/// network's or it has no frames.
template <class Real>
ForwardTrace<Real> forward_trace(const LogFiltSpec& spec,
                                 const BasicModelParams<Real>& params);

/// Class probabilities (24 entries summing to 1).
std::vector<double> forward(const LogFiltSpec& spec, const ModelParams& params);

/// Argmax of `probs`, lowest index on ties.
KeyLabel argmax_key(std::span<const double> probs);

KeyLabel predict_key(const LogFiltSpec& spec, const ModelParams& params);

// Back-propagation building blocks.

/// Gradient of conv2d_same with respect to its input, given the gradient of
/// its output.
template <class Real>
BasicTensor<Real> conv2d_backward_input(const BasicTensor<Real>& grad_output,
                                        const BasicTensor<Real>& kernel);

/// Accumulates kernel and bias gradients of conv2d_same into `grad`.
template <class Real>
void conv2d_backward_params(const BasicTensor<Real>& input,
                            const BasicTensor<Real>& grad_output,
                            ConvParams<Real>& grad);

/// In-place: grad *= f'(pre) where `activated` = f(pre) is the ELU output.
template <class Real>
void elu_backward(const BasicTensor<Real>& activated, BasicTensor<Real>& grad);

// Checkpoint file: "KNET", version (u32), F (u32), flatten-order tag (u8),
// then every tensor as rank (u32), dims (u32 each), row-major f32 payload,
// in tensors() order. Little-endian throughout.
inline constexpr std::uint8_t kFlattenBandMajor = 0;

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace keynet
