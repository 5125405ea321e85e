#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace adlabel {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array with an optional same-length gradient buffer.
//
// The gradient buffer is empty until something accumulates into it, which
// lets the optimizer tell "no gradient was produced" apart from "gradient is
// zero".
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool has_grad() const { return !grad_.empty(); }
  std::span<T> grad() { return grad_; }
  std::span<const T> grad() const { return grad_; }
  // Allocates a zeroed gradient on first use and returns it.
  std::span<T> ensure_grad();
  void clear_grad() { grad_.clear(); }

  void fill(T value);
  void reshape(Shape shape);

  // Throws NumericError naming `what` if any value is NaN or Inf.
  void require_finite(const std::string& what) const;

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
};

template <typename T>
void require_finite(std::span<const T> values, const std::string& what);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace adlabel
