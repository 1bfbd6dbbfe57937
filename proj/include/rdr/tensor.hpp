#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <vector>

#include "rdr/errors.hpp"

namespace rdr {

// Dense row-major tensor over small finite alphabets. The last axis is the
// fastest-varying one; flat indices follow the usual row-major convention.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0) : shape_(std::move(shape)) {
    std::size_t n = checked_size();
    data_.assign(n, fill);
    rebuild_strides();
  }

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size() != data_.size())
      fail(errc::shape_mismatch, "tensor data length does not match shape product");
    rebuild_strides();
  }

  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < shape_.size(); ++a) f += idx[a] * strides_[a];
    return f;
  }

  double at(std::span<const std::size_t> idx) const { return data_[flat_index(idx)]; }
  double& at(std::span<const std::size_t> idx) { return data_[flat_index(idx)]; }

  // Brace-list convenience: t.at({0, 2, 1}).
  double at(std::initializer_list<std::size_t> idx) const {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
  }
  double& at(std::initializer_list<std::size_t> idx) {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
  }

  // Coordinate of a flat cell along one axis.
  std::size_t index_of(std::size_t flat, std::size_t axis) const {
    return (flat / strides_[axis]) % shape_[axis];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::size_t checked_size() const {
    if (shape_.empty()) fail(errc::shape_mismatch, "tensor must have at least one axis");
    std::size_t n = 1;
    for (auto s : shape_) {
      if (s == 0) fail(errc::shape_mismatch, "tensor axis of extent zero");
      n *= s;
    }
    return n;
  }

  void rebuild_strides() {
    strides_.assign(shape_.size(), 1);
    for (std::size_t a = shape_.size(); a-- > 1;) strides_[a - 1] = strides_[a] * shape_[a];
  }

  std::vector<std::size_t> shape_;
  std::vector<std::size_t> strides_;
  std::vector<double> data_;
};

// Odometer step over a multi-index; returns false once the index wraps to all zeros.
inline bool advance_index(std::vector<std::size_t>& idx, std::span<const std::size_t> shape) {
  for (std::size_t a = shape.size(); a-- > 0;) {
    if (++idx[a] < shape[a]) return true;
    idx[a] = 0;
  }
  return false;
}

}  // namespace rdr
