#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "keynet/error.hpp"

namespace keynet {

/// Dense row-major tensor.
template <class Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> shape, Real fill = Real(0))
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  BasicTensor(std::vector<std::size_t> shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw ShapeError("tensor data length does not match shape");
    }
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  template <class Other>
  BasicTensor<Other> cast() const {
    return BasicTensor<Other>(shape_, std::vector<Other>(data_.begin(), data_.end()));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<Real> data_;
};

using Tensor = BasicTensor<float>;

}  // namespace keynet
