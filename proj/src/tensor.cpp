#include "hetfl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "hetfl/errors.hpp"

namespace hetfl {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw DimensionError("from_rows needs at least one row");
  const std::size_t cols = rows.begin()->size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("ragged rows in from_rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (rank() != 2 || begin >= end || end > shape_[0]) {
    throw DimensionError("bad row slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") of " + shape_to_string(shape_));
  }
  const std::size_t cols = shape_[1];
  return Tensor({end - begin, cols},
                std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                                    data_.begin() + static_cast<std::ptrdiff_t>(end * cols)));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  if (rank() != 2 || indices.empty()) throw DimensionError("gather_rows needs a rank-2 tensor and indices");
  const std::size_t cols = shape_[1];
  std::vector<double> out;
  out.reserve(indices.size() * cols);
  for (auto idx : indices) {
    if (idx >= shape_[0]) throw DimensionError("row index " + std::to_string(idx) + " out of range");
    auto r = row(idx);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Tensor({indices.size(), cols}, std::move(out));
}

}  // namespace hetfl
