#pragma once

#include <cstdint>

#include "adlabel/autograd.hpp"
#include "adlabel/random.hpp"
#include "adlabel/tensor.hpp"

namespace adlabel {

enum class DropoutMode { kTrain, kEval };
enum class BatchNormMode { kTrain, kEval, kFrozen };

// Running statistics of one batch-norm layer, one entry per channel.
template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;

  explicit BatchNormState(std::int64_t channels = 1)
      : running_mean(Shape{channels}, T(0)), running_var(Shape{channels}, T(1)) {}
};

// All ops record a backward closure on `tape` when the tape is recording and
// at least one input requires a gradient. Shape violations throw ShapeError.

// input [N,C,H,W], kernel [F,C,kh,kw], bias [F] -> [N,F,H',W'], zero padding.
template <typename T>
Variable<T> conv2d(Tape<T>& tape, const Variable<T>& input, const Variable<T>& kernel,
                   const Variable<T>& bias, int stride, int padding);

template <typename T>
Variable<T> relu(Tape<T>& tape, const Variable<T>& input);

template <typename T>
Variable<T> sigmoid(Tape<T>& tape, const Variable<T>& input);

// [N,C,H,W] -> [N,C], mean over the spatial extent.
template <typename T>
Variable<T> global_average_pool(Tape<T>& tape, const Variable<T>& input);

// Inverted dropout: survivors scaled by 1/(1-rate) so eval mode is identity.
// rate must lie in [0, 1); ConfigError otherwise.
template <typename T>
Variable<T> dropout(Tape<T>& tape, const Variable<T>& input, double rate, DropoutMode mode, Rng& rng);

// Per-channel normalization of [N,C,H,W]. kTrain uses batch statistics and
// updates `state`; kEval and kFrozen read the running statistics only.
template <typename T>
Variable<T> batch_norm(Tape<T>& tape, const Variable<T>& input, const Variable<T>& scale,
                       const Variable<T>& shift, BatchNormState<T>& state, BatchNormMode mode);

// Inference-only path that never touches `state`.
template <typename T>
Variable<T> batch_norm_inference(Tape<T>& tape, const Variable<T>& input, const Variable<T>& scale,
                                 const Variable<T>& shift, const BatchNormState<T>& state);

// input [N,D], kernel [D,K], bias [K] -> [N,K].
template <typename T>
Variable<T> dense(Tape<T>& tape, const Variable<T>& input, const Variable<T>& kernel, const Variable<T>& bias);

inline constexpr double kProbabilityClamp = 1e-7;

// Mean over all N*K entries of -(y ln p + (1-y) ln(1-p)), p clamped to
// [1e-7, 1-1e-7]. Returns a [1] tensor.
template <typename T>
Variable<T> binary_cross_entropy(Tape<T>& tape, const Variable<T>& probabilities, const Tensor<T>& labels);

}  // namespace adlabel
