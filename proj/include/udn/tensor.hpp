#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "udn/errors.hpp"

namespace udn {

// Dense row-major tensor of 64-bit reals. Rank 0 (empty shape) is a scalar
// with one element.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape))
      throw ConfigError("tensor data length does not match shape");
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = count(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  static Tensor scalar(double v) { return Tensor({}, {v}); }

  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> d) {
    return Tensor({rows, cols}, std::vector<double>(d));
  }

  static Tensor vector(std::initializer_list<double> d) {
    std::vector<double> v(d);
    std::vector<std::size_t> shape{v.size()};
    return Tensor(std::move(shape), std::move(v));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const {
    if (rank() != 2) throw ConfigError("rows() requires a rank-2 tensor");
    return shape[0];
  }
  std::size_t cols() const {
    if (rank() != 2) throw ConfigError("cols() requires a rank-2 tensor");
    return shape[1];
  }

  double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return data[i * shape[1] + j];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace udn
