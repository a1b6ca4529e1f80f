#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hetfl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// 2-D tensor from nested rows; every row must have the same length.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D accessors; callers guarantee rank 2.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * shape_[1], shape_[1]};
  }

  void fill(double value);
  bool all_finite() const;

  /// Rows [begin, end) of a rank-2 tensor.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;
  /// Rows picked by index, in the order given.
  Tensor gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace hetfl
