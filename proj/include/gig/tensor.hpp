#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gig::ad {

inline std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape);

/// Dense row-major float64 array. Scalars are shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape)
      : shape_(std::move(shape)),
        data_(static_cast<std::size_t>(shape_numel(shape_)), 0.0) {}
  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_))
      throw std::invalid_argument("tensor data length does not match shape " +
                                  shape_str(shape_));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace gig::ad
