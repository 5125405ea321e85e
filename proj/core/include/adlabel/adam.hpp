#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>

#include "adlabel/autograd.hpp"

namespace adlabel {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;

  void validate() const;
};

template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }

  // Moments for `name`, created zeroed with `shape` on first use.
  struct Moments {
    Tensor<T> first;
    Tensor<T> second;
  };
  Moments& moments(const std::string& name, const Shape& shape);
  const Moments* find(const std::string& name) const;

  void increment() { ++step_count_; }

 private:
  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

// One bias-corrected Adam update over every trainable parameter. Frozen
// parameters are skipped entirely. A trainable parameter without a gradient
// is an Error; a non-finite gradient is a NumericError.
template <typename T>
void adam_step(std::span<Parameter<T>> params, AdamState<T>& state);

// Drops every parameter's gradient buffer.
template <typename T>
void zero_grad(std::span<Parameter<T>> params) {
  for (auto& p : params) p.value.tensor().clear_grad();
}

extern template class AdamState<float>;
extern template class AdamState<double>;

}  // namespace adlabel
