#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace phz::nn {

/// Dense real tensor. Activations are laid out C x H x W, convolution kernels
/// O x C x kH x kW, both row-major innermost-last.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a backward pass fills it

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(count(t.shape), 0.0);
    t.requires_grad = requires_grad;
    return t;
  }

  static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& x : t.data) x = v;
    return t;
  }

  static std::size_t count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: empty shape");
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
      n *= d;
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }

  void zero_grad() {
    grad.assign(data.size(), 0.0);
  }
};

}  // namespace phz::nn
