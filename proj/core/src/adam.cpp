#include "adlabel/adam.hpp"

#include <cmath>

#include "adlabel/error.hpp"

namespace adlabel {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("adam: learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
}

template <typename T>
AdamState<T>::AdamState(AdamConfig config) : config_(config) {
  config_.validate();
}

template <typename T>
typename AdamState<T>::Moments& AdamState<T>::moments(const std::string& name, const Shape& shape) {
  auto it = moments_.find(name);
  if (it == moments_.end()) {
    it = moments_.emplace(name, Moments{Tensor<T>(shape), Tensor<T>(shape)}).first;
  } else if (it->second.first.shape() != shape) {
    throw ShapeError("adam: parameter " + name + " changed shape from " + shape_string(it->second.first.shape()) +
                     " to " + shape_string(shape));
  }
  return it->second;
}

template <typename T>
const typename AdamState<T>::Moments* AdamState<T>::find(const std::string& name) const {
  auto it = moments_.find(name);
  return it == moments_.end() ? nullptr : &it->second;
}

template <typename T>
void adam_step(std::span<Parameter<T>> params, AdamState<T>& state) {
  for (const auto& p : params) {
    if (!p.trainable()) continue;
    const auto& t = p.value.tensor();
    if (!t.has_grad()) throw Error("adam: trainable parameter " + p.name + " has no gradient");
    require_finite<T>(t.grad(), "gradient of " + p.name);
  }

  state.increment();
  const AdamConfig& c = state.config();
  const double t = static_cast<double>(state.step_count());
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (auto& p : params) {
    if (!p.trainable()) continue;
    auto& tensor = p.value.tensor();
    auto& m = state.moments(p.name, tensor.shape());
    auto w = tensor.data();
    auto g = tensor.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = c.beta1 * m.first[i] + (1.0 - c.beta1) * gi;
      const double vi = c.beta2 * m.second[i] + (1.0 - c.beta2) * gi * gi;
      m.first[i] = static_cast<T>(mi);
      m.second[i] = static_cast<T>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      w[i] = static_cast<T>(w[i] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;
template void adam_step<float>(std::span<Parameter<float>>, AdamState<float>&);
template void adam_step<double>(std::span<Parameter<double>>, AdamState<double>&);

}  // namespace adlabel
