#pragma once

#include <cmath>
#include <numbers>

#include "phz/grid.hpp"

namespace phz {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Principal value of a phase: maps phi into [-pi, pi).
inline double wrap_scalar(double phi) {
  if (!std::isfinite(phi)) throw std::domain_error("wrap_scalar: non-finite input");
  // Values already in range are fixed points; returning them untouched keeps
  // wrapping exactly idempotent in floating point.
  if (phi >= -kPi && phi < kPi) return phi;
  double m = std::fmod(phi + kPi, kTwoPi);
  if (m < 0.0) m += kTwoPi;
  if (m >= kTwoPi) m -= kTwoPi;  // fmod epsilon can round back up to 2*pi
  return m - kPi;
}

inline Grid2D wrap_grid(const Grid2D& phi) {
  Grid2D out(phi.height, phi.width);
  for (std::size_t n = 0; n < phi.size(); ++n) out.data[n] = wrap_scalar(phi.data[n]);
  return out;
}

/// Forward differences with zero trailing column (gx) and row (gy).
inline GradientField forward_gradient(const Grid2D& phi) {
  GradientField g{Grid2D(phi.height, phi.width), Grid2D(phi.height, phi.width)};
  for (std::size_t i = 0; i < phi.height; ++i) {
    const double* src = phi.row(i);
    double* gx = g.gx.row(i);
    for (std::size_t j = 0; j + 1 < phi.width; ++j) gx[j] = src[j + 1] - src[j];
  }
  for (std::size_t i = 0; i + 1 < phi.height; ++i) {
    const double* src = phi.row(i);
    const double* nxt = phi.row(i + 1);
    double* gy = g.gy.row(i);
    for (std::size_t j = 0; j < phi.width; ++j) gy[j] = nxt[j] - src[j];
  }
  return g;
}

/// Wrapped forward differences of a wrapped phase; the classical estimate of
/// the true gradient wherever the per-pixel gradient norm stays below pi.
inline GradientField wrapped_gradient(const Grid2D& psi) {
  GradientField g = forward_gradient(psi);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    g.gx.data[n] = wrap_scalar(g.gx.data[n]);
    g.gy.data[n] = wrap_scalar(g.gy.data[n]);
  }
  return g;
}

/// Mask of pixels whose forward-difference norm exceeds pi (1 = violation).
inline Grid2D itoh_violations(const Grid2D& phi) {
  GradientField g = forward_gradient(phi);
  Grid2D mask(phi.height, phi.width);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    double sq = g.gx.data[n] * g.gx.data[n] + g.gy.data[n] * g.gy.data[n];
    mask.data[n] = sq > kPi * kPi ? 1.0 : 0.0;
  }
  return mask;
}

/// Residual magnitudes between the estimate's gradient and the wrapped
/// gradient of the measurement: e_n = ||[grad(phi) - W(grad(psi))]_n||_2.
inline Grid2D gradient_residual_norms(const Grid2D& phi, const Grid2D& psi) {
  require_same_shape(phi, psi, "gradient_residual_norms");
  GradientField gp = forward_gradient(phi);
  GradientField gw = wrapped_gradient(psi);
  Grid2D e(phi.height, phi.width);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    double rx = gp.gx.data[n] - gw.gx.data[n];
    double ry = gp.gy.data[n] - gw.gy.data[n];
    e.data[n] = std::sqrt(rx * rx + ry * ry);
  }
  return e;
}

/// Reciprocal-residual weights, clamped: w = 1/max(eps_min, min(e, eps_max)).
inline Grid2D adaptive_weights(const Grid2D& phi, const Grid2D& psi, const WeightBounds& b) {
  b.validate();
  Grid2D e = gradient_residual_norms(phi, psi);
  Grid2D w(phi.height, phi.width);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    double en = e.data[n];
    if (en >= b.eps_max)
      w.data[n] = 1.0 / b.eps_max;
    else if (en <= b.eps_min)
      w.data[n] = 1.0 / b.eps_min;
    else
      w.data[n] = 1.0 / en;
  }
  return w;
}

/// Snaps an estimate onto the lattice of phases congruent with psi:
/// phi_tilde = phi_hat + W(psi - phi_hat). Rewrapping phi_tilde recovers psi.
inline Grid2D congruence(const Grid2D& psi, const Grid2D& phi_hat) {
  require_same_shape(psi, phi_hat, "congruence");
  Grid2D out(psi.height, psi.width);
  for (std::size_t n = 0; n < psi.size(); ++n)
    out.data[n] = phi_hat.data[n] + wrap_scalar(psi.data[n] - phi_hat.data[n]);
  return out;
}

/// Weighted unsquared data energy: sum_n w_n ||[grad(phi) - W(grad(psi))]_n||_2.
inline double weighted_energy(const Grid2D& phi, const Grid2D& psi, const Grid2D& w) {
  require_same_shape(phi, w, "weighted_energy");
  Grid2D e = gradient_residual_norms(phi, psi);
  double acc = 0.0;
  for (std::size_t n = 0; n < phi.size(); ++n) acc += w.data[n] * e.data[n];
  return acc;
}

/// Weighted squared data energy: sum_n w_n ||[grad(phi) - W(grad(psi))]_n||_2^2.
/// This is the quadratic objective of one reweighted least-squares round; it
/// decreases monotonically along conjugate-gradient iterations.
inline double weighted_squared_energy(const Grid2D& phi, const Grid2D& psi, const Grid2D& w) {
  require_same_shape(phi, w, "weighted_squared_energy");
  Grid2D e = gradient_residual_norms(phi, psi);
  double acc = 0.0;
  for (std::size_t n = 0; n < phi.size(); ++n) acc += w.data[n] * e.data[n] * e.data[n];
  return acc;
}

}  // namespace phz
