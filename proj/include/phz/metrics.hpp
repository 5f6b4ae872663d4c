#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "phz/core.hpp"
#include "phz/grid.hpp"

namespace phz::metrics {

/// Regularized SNR of an estimate against ground truth. The constant offset
/// that unwrapping cannot determine is removed by the closed-form optimum
/// b* = mean(truth - estimate) before the error norm is taken.
struct Rsnr {
  double value_db = 0.0;   // +inf when flagged infinite
  double raw_db = 0.0;     // unclamped value, +inf for exact recovery
  double offset_b = 0.0;
  bool infinite = false;   // raw_db > 100 dB
};

inline Rsnr rsnr(const Grid2D& estimate, const Grid2D& truth) {
  require_same_shape(estimate, truth, "rsnr");
  double truth_sq = 0.0;
  double diff_sum = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    truth_sq += truth.data[n] * truth.data[n];
    diff_sum += truth.data[n] - estimate.data[n];
  }
  if (!(truth_sq > 0.0)) throw std::invalid_argument("rsnr: zero-norm truth");
  Rsnr r;
  r.offset_b = diff_sum / static_cast<double>(truth.size());
  double err_sq = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    double d = estimate.data[n] + r.offset_b - truth.data[n];
    err_sq += d * d;
  }
  if (err_sq == 0.0) {
    r.raw_db = std::numeric_limits<double>::infinity();
  } else {
    r.raw_db = 10.0 * std::log10(truth_sq / err_sq);
  }
  r.infinite = r.raw_db > 100.0;
  r.value_db = r.infinite ? std::numeric_limits<double>::infinity() : r.raw_db;
  return r;
}

namespace detail {

inline constexpr int kSsimWindow = 11;

inline const double* ssim_kernel() {
  // 11x11 Gaussian, sigma 1.5, normalized to unit sum; built once.
  static const auto k = [] {
    std::array<double, kSsimWindow * kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i)
      for (int j = 0; j < kSsimWindow; ++j) {
        double dy = i - (kSsimWindow - 1) / 2.0;
        double dx = j - (kSsimWindow - 1) / 2.0;
        w[i * kSsimWindow + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
        sum += w[i * kSsimWindow + j];
      }
    for (double& v : w) v /= sum;
    return w;
  }();
  return k.data();
}

}  // namespace detail

/// Mean local structural similarity over all fully interior 11x11 windows.
/// Stabilizers c1 = 1e-4, c2 = 9e-4; the structure term uses the weighted
/// cross-covariance between the two fields.
inline double ssim(const Grid2D& estimate, const Grid2D& truth) {
  require_same_shape(estimate, truth, "ssim");
  const int win = detail::kSsimWindow;
  if (estimate.height < static_cast<std::size_t>(win) ||
      estimate.width < static_cast<std::size_t>(win))
    throw std::invalid_argument("ssim: grid smaller than the 11x11 window");
  const double* k = detail::ssim_kernel();
  const double c1 = 1e-4;
  const double c2 = 9e-4;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t ci = 0; ci + win <= estimate.height; ++ci) {
    for (std::size_t cj = 0; cj + win <= estimate.width; ++cj) {
      double mx = 0.0, my = 0.0;
      for (int i = 0; i < win; ++i) {
        const double* ex = estimate.row(ci + i) + cj;
        const double* tx = truth.row(ci + i) + cj;
        const double* kw = k + i * win;
        for (int j = 0; j < win; ++j) {
          mx += kw[j] * ex[j];
          my += kw[j] * tx[j];
        }
      }
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int i = 0; i < win; ++i) {
        const double* ex = estimate.row(ci + i) + cj;
        const double* tx = truth.row(ci + i) + cj;
        const double* kw = k + i * win;
        for (int j = 0; j < win; ++j) {
          double dx = ex[j] - mx;
          double dy = tx[j] - my;
          vx += kw[j] * dx * dx;
          vy += kw[j] * dy * dy;
          cov += kw[j] * dx * dy;
        }
      }
      double l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
      double s = (2.0 * cov + c2) / (vx + vy + c2);
      acc += l * s;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

/// Relative L2 distance between the measurement and the rewrapped estimate.
/// Congruent estimates score at floating-point noise level.
inline double rewrap_error(const Grid2D& phi_tilde, const Grid2D& psi) {
  require_same_shape(phi_tilde, psi, "rewrap_error");
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < psi.size(); ++n) {
    double d = psi.data[n] - wrap_scalar(phi_tilde.data[n]);
    num += d * d;
    den += psi.data[n] * psi.data[n];
  }
  if (!(den > 0.0)) throw std::invalid_argument("rewrap_error: zero-norm psi");
  return std::sqrt(num / den);
}

/// Per-pixel difference of integer wrap counts relative to the measurement.
inline Grid2D wrap_count_error(const Grid2D& estimate, const Grid2D& truth, const Grid2D& psi) {
  require_same_shape(estimate, truth, "wrap_count_error");
  require_same_shape(estimate, psi, "wrap_count_error");
  Grid2D out(psi.height, psi.width);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    double ke = std::round((estimate.data[n] - psi.data[n]) / kTwoPi);
    double kt = std::round((truth.data[n] - psi.data[n]) / kTwoPi);
    out.data[n] = ke - kt;
  }
  return out;
}

}  // namespace phz::metrics
