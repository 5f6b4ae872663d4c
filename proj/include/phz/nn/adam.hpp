#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "phz/nn/tensor.hpp"

namespace phz::nn {

/// First/second moment state for Adam. Moment buffers are keyed by parameter
/// position and sized on the first step.
struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("AdamState: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("AdamState: betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("AdamState: eps must be positive");
  }
};

/// One Adam update over a fixed parameter list, reading each tensor's grad
/// buffer: m and v are exponential moment averages, bias-corrected, and the
/// parameter moves by -lr * m_hat / (sqrt(v_hat) + eps).
inline void adam_step(std::span<Tensor* const> params, AdamState& st) {
  st.validate();
  if (st.m.empty()) {
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      st.m[p].assign(params[p]->numel(), 0.0);
      st.v[p].assign(params[p]->numel(), 0.0);
    }
  }
  if (st.m.size() != params.size()) throw std::invalid_argument("adam_step: parameter list changed");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    if (t.grad.size() != t.data.size())
      throw std::invalid_argument("adam_step: parameter is missing its gradient");
    if (st.m[p].size() != t.data.size())
      throw std::invalid_argument("adam_step: state size mismatch");
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      double g = t.grad[i];
      st.m[p][i] = st.beta1 * st.m[p][i] + (1.0 - st.beta1) * g;
      st.v[p][i] = st.beta2 * st.v[p][i] + (1.0 - st.beta2) * g * g;
      double mh = st.m[p][i] / c1;
      double vh = st.v[p][i] / c2;
      t.data[i] -= st.lr * mh / (std::sqrt(vh) + st.eps);
    }
  }
}

}  // namespace phz::nn
