#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nco {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
// pointer network needs; rank 0 is represented as shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != count(shape))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int e : s) {
      if (e < 0) throw std::invalid_argument("Tensor: negative extent");
      n *= e;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    auto n = count(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), 0.0));
  }
  static Tensor full(std::vector<int> s, double v) {
    auto n = count(s);
    return Tensor(std::move(s), std::vector<double>(static_cast<size_t>(n), v));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  bool is_scalar() const { return size() == 1; }

  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& at(int i) { return data[static_cast<size_t>(i)]; }
  double at(int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * cols() + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const;
  std::string shape_str() const;
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

ShapeError shape_error(const std::string& op, const Tensor& a, const Tensor& b);
ShapeError shape_error(const std::string& op, const Tensor& a);

}  // namespace nco
