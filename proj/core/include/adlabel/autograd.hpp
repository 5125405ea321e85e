#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "adlabel/tensor.hpp"

namespace adlabel {

// Shared handle to a tensor that may take part in differentiation.
//
// Copies alias the same storage, so a backward closure that captured a
// Variable writes gradients the caller can read afterwards.
template <typename T>
class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node>(Node{std::move(value), requires_grad})) {}

  bool defined() const { return node_ != nullptr; }
  Tensor<T>& tensor() const { return node_->tensor; }
  const Shape& shape() const { return node_->tensor.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) const { node_->requires_grad = on; }

  // Deep copy with its own storage.
  Variable clone() const { return Variable(node_->tensor, node_->requires_grad); }

  friend bool same_node(const Variable& a, const Variable& b) { return a.node_ == b.node_; }

 private:
  struct Node {
    Tensor<T> tensor;
    bool requires_grad;
  };
  std::shared_ptr<Node> node_;
};

// Define-by-run gradient tape. Every forward op that produces a value needing
// a gradient appends a closure; backward() replays them in reverse.
template <typename T>
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool recording) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }

  // Starts a new forward pass: drops old closures and re-arms backward().
  void reset() {
    entries_.clear();
    consumed_ = false;
  }

  void record(std::function<void()> fn) {
    if (recording_) entries_.push_back(std::move(fn));
  }

  std::size_t size() const { return entries_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. Throws Error when called a
  // second time on the same forward pass, ShapeError if loss is not scalar.
  void backward(const Variable<T>& loss);

 private:
  std::vector<std::function<void()>> entries_;
  bool recording_ = true;
  bool consumed_ = false;
};

template <typename T>
struct Parameter {
  std::string name;
  Variable<T> value;

  bool trainable() const { return value.requires_grad(); }
  void set_trainable(bool on) { value.set_requires_grad(on); }
};

template <typename T>
Parameter<T> make_parameter(std::string name, Tensor<T> value, bool trainable = true) {
  return Parameter<T>{std::move(name), Variable<T>(std::move(value), trainable)};
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace adlabel
