#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "phz/core.hpp"
#include "phz/grid.hpp"
#include "phz/rng.hpp"

namespace phz::datagen {

/// Elliptical Gaussian with an angular sector removed. Radii are in pixels
/// (vertical, horizontal); sigma scales against the normalized radius; the
/// sector [0, crop_angle) degrees, measured counterclockwise from the +x
/// image axis around the grid center, is zeroed.
struct EllipseSpec {
  double radius_y = 80.0;
  double radius_x = 110.0;
  double amplitude = 15.0;
  double sigma = 0.45;
  double crop_angle = 0.0;

  void validate() const {
    if (!(radius_y > 0.0) || !(radius_x > 0.0))
      throw std::invalid_argument("EllipseSpec: radii must be positive");
    if (!(amplitude > 0.0)) throw std::invalid_argument("EllipseSpec: amplitude must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("EllipseSpec: sigma must be positive");
    if (!(crop_angle >= 0.0 && crop_angle <= 360.0))
      throw std::invalid_argument("EllipseSpec: crop_angle outside [0, 360]");
  }
};

/// Smooth elliptical Gaussian phase object plus its wrapped measurement.
inline std::pair<Grid2D, Grid2D> gen_sample_b(const EllipseSpec& spec, std::size_t height = 256,
                                              std::size_t width = 256) {
  spec.validate();
  Grid2D truth(height, width);
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      double dy = (static_cast<double>(i) - cy) / spec.radius_y;
      double dx = (static_cast<double>(j) - cx) / spec.radius_x;
      double r2 = dx * dx + dy * dy;
      if (r2 >= 1.0) continue;  // outside the ellipse the phase stays zero
      if (spec.crop_angle > 0.0) {
        // Image angle with y growing downward: flip the vertical axis so the
        // sector is counterclockwise from +x.
        double theta = std::atan2(cy - static_cast<double>(i), static_cast<double>(j) - cx);
        double deg = theta * 180.0 / kPi;
        if (deg < 0.0) deg += 360.0;
        if (deg < spec.crop_angle) continue;
      }
      truth.at(i, j) = spec.amplitude * std::exp(-r2 / (2.0 * spec.sigma * spec.sigma));
    }
  }
  return {truth, wrap_grid(truth)};
}

/// Fixed-geometry variant (radii 102/120, 135 degree crop) rescaled so the
/// realized maximum equals max_value exactly.
inline std::pair<Grid2D, Grid2D> gen_sample_c(double max_value, double sigma = 0.45,
                                              std::size_t height = 256, std::size_t width = 256) {
  if (!(max_value > 0.0)) throw std::invalid_argument("gen_sample_c: max_value must be positive");
  EllipseSpec spec;
  spec.radius_y = 102.0;
  spec.radius_x = 120.0;
  spec.amplitude = 1.0;
  spec.sigma = sigma;
  spec.crop_angle = 135.0;
  Grid2D truth = gen_sample_b(spec, height, width).first;
  auto peak_it = std::max_element(truth.data.begin(), truth.data.end());
  if (!(*peak_it > 0.0)) throw std::invalid_argument("gen_sample_c: degenerate geometry");
  double scale = max_value / *peak_it;
  // Rounding in v * scale can land an ulp past the target, so clamp and pin
  // the peak pixel: the realized maximum is max_value exactly.
  for (double& v : truth.data) v = std::min(v * scale, max_value);
  *peak_it = max_value;
  return {truth, wrap_grid(truth)};
}

namespace detail {

// Catmull-Rom weights (a = -0.5) for taps [p-1, p, p+1, p+2] at fraction t.
inline std::array<double, 4> cubic_weights(double t) {
  double t2 = t * t;
  double t3 = t2 * t;
  return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t,
          0.5 * t3 - 0.5 * t2};
}

// One separable pass along the row direction: src (h x w) -> (h x tw).
inline Grid2D cubic_pass_cols(const Grid2D& src, std::size_t tw) {
  Grid2D out(src.height, tw);
  const double scale = static_cast<double>(src.width) / static_cast<double>(tw);
  for (std::size_t ox = 0; ox < tw; ++ox) {
    double sx = (static_cast<double>(ox) + 0.5) * scale - 0.5;
    double fx = std::floor(sx);
    double t = sx - fx;
    auto w = cubic_weights(t);
    std::ptrdiff_t base = static_cast<std::ptrdiff_t>(fx);
    std::array<std::size_t, 4> tap;
    for (int k = 0; k < 4; ++k) {
      std::ptrdiff_t ix = base - 1 + k;
      ix = std::clamp<std::ptrdiff_t>(ix, 0, static_cast<std::ptrdiff_t>(src.width) - 1);
      tap[k] = static_cast<std::size_t>(ix);
    }
    for (std::size_t i = 0; i < src.height; ++i) {
      const double* r = src.row(i);
      out.at(i, ox) = w[0] * r[tap[0]] + w[1] * r[tap[1]] + w[2] * r[tap[2]] + w[3] * r[tap[3]];
    }
  }
  return out;
}

inline Grid2D transpose(const Grid2D& g) {
  Grid2D out(g.width, g.height);
  for (std::size_t i = 0; i < g.height; ++i)
    for (std::size_t j = 0; j < g.width; ++j) out.at(j, i) = g.at(i, j);
  return out;
}

}  // namespace detail

/// Separable Catmull-Rom upsampling with half-pixel centers and edge clamping.
inline Grid2D bicubic_upsample(const Grid2D& src, std::size_t th, std::size_t tw) {
  if (th == 0 || tw == 0) throw std::invalid_argument("bicubic_upsample: zero target size");
  Grid2D cols = detail::cubic_pass_cols(src, tw);
  return detail::transpose(detail::cubic_pass_cols(detail::transpose(cols), th));
}

enum class SurfaceDist { Uniform01, GaussianShifted };

/// Random low-resolution matrix inflated to a smooth surface.
struct RandomSurfaceSpec {
  int matrix_size = 5;           // odd, in {3,5,7,9,11}
  SurfaceDist dist = SurfaceDist::Uniform01;
  double scale = 15.0;           // multiplies the matrix before upsampling
  std::size_t target_size = 256;

  void validate() const {
    if (matrix_size < 3 || matrix_size > 11 || matrix_size % 2 == 0)
      throw std::invalid_argument("RandomSurfaceSpec: matrix_size must be odd in [3, 11]");
    if (!(scale > 0.0)) throw std::invalid_argument("RandomSurfaceSpec: scale must be positive");
    if (target_size < static_cast<std::size_t>(matrix_size))
      throw std::invalid_argument("RandomSurfaceSpec: target smaller than matrix");
  }
};

/// Smooth nonnegative random surface restricted to the central disk, plus its
/// wrapped measurement. Matrix entries are Uniform[0,1) or min-shifted
/// Gaussians; the upsampled surface is clamped to the matrix range (bicubic
/// interpolation overshoots) so values stay in [0, scale * max(matrix)].
inline std::pair<Grid2D, Grid2D> gen_sample_d(const RandomSurfaceSpec& spec, std::uint64_t seed) {
  spec.validate();
  rng::Rand rnd(rng::mix(seed, 0x5d5d5d5dull));
  const int m = spec.matrix_size;
  Grid2D matrix(static_cast<std::size_t>(m), static_cast<std::size_t>(m));
  if (spec.dist == SurfaceDist::Uniform01) {
    for (double& v : matrix.data) v = rnd.uniform();
  } else {
    for (double& v : matrix.data) v = rnd.normal();
    double lo = *std::min_element(matrix.data.begin(), matrix.data.end());
    for (double& v : matrix.data) v -= lo;
  }
  double hi = *std::max_element(matrix.data.begin(), matrix.data.end());
  for (double& v : matrix.data) v *= spec.scale;
  Grid2D truth = bicubic_upsample(matrix, spec.target_size, spec.target_size);
  double cap = spec.scale * hi;
  for (double& v : truth.data) v = std::clamp(v, 0.0, cap);
  // Central disk: tangent to the image borders, background stays zero.
  const double c = (static_cast<double>(spec.target_size) - 1.0) / 2.0;
  const double r2 = (static_cast<double>(spec.target_size) / 2.0) *
                    (static_cast<double>(spec.target_size) / 2.0);
  for (std::size_t i = 0; i < truth.height; ++i)
    for (std::size_t j = 0; j < truth.width; ++j) {
      double dy = static_cast<double>(i) - c;
      double dx = static_cast<double>(j) - c;
      if (dy * dy + dx * dx > r2) truth.at(i, j) = 0.0;
    }
  return {truth, wrap_grid(truth)};
}

/// Adds zero-mean speckle-like noise (unit-mean exponential intensities,
/// recentered) scaled so the realized SNR in dB is exact. A +inf target
/// returns the input unchanged.
inline Grid2D add_speckle(const Grid2D& phi, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return phi;
  if (!std::isfinite(snr_db)) throw std::invalid_argument("add_speckle: bad SNR target");
  rng::Rand rnd(rng::mix(seed, 0xe5e5e5e5ull));
  std::vector<double> noise(phi.size());
  double mean = 0.0;
  for (double& v : noise) {
    v = rnd.exponential();
    mean += v;
  }
  mean /= static_cast<double>(noise.size());
  double noise_sq = 0.0, signal_sq = 0.0;
  for (std::size_t n = 0; n < noise.size(); ++n) {
    noise[n] -= mean;
    noise_sq += noise[n] * noise[n];
    signal_sq += phi.data[n] * phi.data[n];
  }
  if (!(noise_sq > 0.0)) return phi;
  double gain = std::sqrt(signal_sq / noise_sq) * std::pow(10.0, -snr_db / 20.0);
  Grid2D out = phi;
  for (std::size_t n = 0; n < out.size(); ++n) out.data[n] += gain * noise[n];
  return out;
}

/// Noisy elliptical Gaussian: sample B geometry with sector crop plus exact
/// target SNR speckle, wrapped after perturbation. Metrics for this scenario
/// are taken against the perturbed (pre-wrap) truth.
inline std::pair<Grid2D, Grid2D> gen_sample_e(const EllipseSpec& spec, double snr_db,
                                              std::uint64_t seed, std::size_t height = 256,
                                              std::size_t width = 256) {
  auto [truth, wrapped] = gen_sample_b(spec, height, width);
  Grid2D perturbed = add_speckle(truth, snr_db, seed);
  return {perturbed, wrap_grid(perturbed)};
}

/// Triaxial ellipsoid body: interior refractive index n_interior; an optional
/// shared shell (see PhantomSpec) wraps each body.
struct Ellipsoid {
  std::array<double, 3> center{0.0, 0.0, 0.0};     // micrometers
  std::array<double, 3> semi_axes{10.0, 10.0, 10.0};
  double n_interior = 1.40;
};

/// Scene description for the straight-ray phase projector. Distances in
/// micrometers; rays run along the third axis.
struct PhantomSpec {
  std::vector<Ellipsoid> bodies;
  double shell_ri = 0.0;        // <= 0 disables the shell
  double shell_thickness = 0.0;
  double medium_ri = 1.33;
  double wavelength = 0.532;
  double voxel_pitch = 0.1;     // sampling step along the ray
  double pixel_pitch = 0.5;     // detector sampling

  void validate() const {
    if (bodies.empty()) throw std::invalid_argument("PhantomSpec: no bodies");
    for (const auto& b : bodies) {
      for (double s : b.semi_axes)
        if (!(s > 0.0)) throw std::invalid_argument("PhantomSpec: semi-axes must be positive");
      if (!(b.n_interior > 0.0)) throw std::invalid_argument("PhantomSpec: bad interior RI");
    }
    if (!(medium_ri > 0.0) || !(wavelength > 0.0) || !(voxel_pitch > 0.0) || !(pixel_pitch > 0.0))
      throw std::invalid_argument("PhantomSpec: scales must be positive");
    if (shell_thickness < 0.0) throw std::invalid_argument("PhantomSpec: negative shell thickness");
  }
};

namespace detail {

// Parametric interval of a vertical ray (x1, x2 fixed) inside an axis-aligned
// ellipsoid inflated by `grow`; false when the ray misses.
inline bool ray_interval(const Ellipsoid& e, double grow, double x1, double x2, double& lo,
                         double& hi) {
  double a = e.semi_axes[0] + grow;
  double b = e.semi_axes[1] + grow;
  double c = e.semi_axes[2] + grow;
  double u = (x1 - e.center[0]) / a;
  double v = (x2 - e.center[1]) / b;
  double q = 1.0 - u * u - v * v;
  if (q <= 0.0) return false;
  double half = c * std::sqrt(q);
  lo = e.center[2] - half;
  hi = e.center[2] + half;
  return true;
}

}  // namespace detail

/// Projects the phantom along the third axis: phase = (2*pi/lambda) times the
/// integral of (n - n_medium). Sampling marches midpoints at the voxel pitch
/// across an analytic bound of the occupied interval; where bodies overlap the
/// larger index wins.
inline Grid2D straight_ray_phase(const PhantomSpec& spec, std::size_t height, std::size_t width) {
  spec.validate();
  Grid2D out(height, width);
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const bool shelled = spec.shell_ri > 0.0 && spec.shell_thickness > 0.0;
  const double grow = shelled ? spec.shell_thickness : 0.0;
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      double x1 = (static_cast<double>(j) - cx) * spec.pixel_pitch;
      double x2 = (static_cast<double>(i) - cy) * spec.pixel_pitch;
      double lo = 0.0, hi = 0.0;
      bool any = false;
      for (const auto& b : spec.bodies) {
        double l, h;
        if (!detail::ray_interval(b, grow, x1, x2, l, h)) continue;
        if (!any) {
          lo = l;
          hi = h;
          any = true;
        } else {
          lo = std::min(lo, l);
          hi = std::max(hi, h);
        }
      }
      if (!any) continue;
      auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / spec.voxel_pitch));
      if (steps == 0) continue;
      double step = (hi - lo) / static_cast<double>(steps);
      double opl = 0.0;
      for (std::size_t k = 0; k < steps; ++k) {
        double x3 = lo + (static_cast<double>(k) + 0.5) * step;
        double n = spec.medium_ri;
        for (const auto& b : spec.bodies) {
          double u = (x1 - b.center[0]) / b.semi_axes[0];
          double v = (x2 - b.center[1]) / b.semi_axes[1];
          double w = (x3 - b.center[2]) / b.semi_axes[2];
          if (u * u + v * v + w * w <= 1.0) {
            n = std::max(n, b.n_interior);
          } else if (shelled) {
            double us = (x1 - b.center[0]) / (b.semi_axes[0] + grow);
            double vs = (x2 - b.center[1]) / (b.semi_axes[1] + grow);
            double ws = (x3 - b.center[2]) / (b.semi_axes[2] + grow);
            if (us * us + vs * vs + ws * ws <= 1.0) n = std::max(n, spec.shell_ri);
          }
        }
        opl += (n - spec.medium_ri) * step;
      }
      out.at(i, j) = kTwoPi / spec.wavelength * opl;
    }
  }
  return out;
}

/// One wrapped-phase / wrap-count training pair.
struct PhasenetTuple {
  Grid2D truth;
  Grid2D wrapped;
  Grid2D wrap_count;  // integers, k = (truth - wrapped) / 2pi
  std::uint64_t seed = 0;
  double scale = 0.0;
  int matrix_size = 0;
  SurfaceDist dist = SurfaceDist::Uniform01;
};

/// Wrap-count dataset: random smooth disk surfaces with overall scale drawn
/// from U(3pi, 12pi) and matrix sizes from {3,5,7,9,11}; tuples alternate the
/// matrix distribution. Surfaces are capped at 40pi so counts stay in [0, 20]
/// (21 classes).
inline std::vector<PhasenetTuple> gen_phasenet_dataset(std::size_t count, std::uint64_t seed,
                                                       std::size_t target_size = 256) {
  std::vector<PhasenetTuple> out;
  out.reserve(count);
  constexpr std::array<int, 5> kSizes{3, 5, 7, 9, 11};
  for (std::size_t t = 0; t < count; ++t) {
    PhasenetTuple tup;
    tup.seed = rng::mix(seed, t);
    rng::Rand rnd(tup.seed);
    tup.matrix_size = kSizes[rnd.index(kSizes.size())];
    tup.dist = (t % 2 == 0) ? SurfaceDist::Uniform01 : SurfaceDist::GaussianShifted;
    tup.scale = rnd.uniform(3.0 * kPi, 12.0 * kPi);
    RandomSurfaceSpec spec;
    spec.matrix_size = tup.matrix_size;
    spec.dist = tup.dist;
    spec.scale = tup.scale;
    spec.target_size = target_size;
    auto [truth, wrapped] = gen_sample_d(spec, rng::mix(tup.seed, 1));
    double peak = *std::max_element(truth.data.begin(), truth.data.end());
    if (peak > 40.0 * kPi) {
      double shrink = 40.0 * kPi / peak;
      for (double& v : truth.data) v *= shrink;
      wrapped = wrap_grid(truth);
    }
    tup.wrap_count = Grid2D(truth.height, truth.width);
    for (std::size_t n = 0; n < truth.size(); ++n)
      tup.wrap_count.data[n] = std::round((truth.data[n] - wrapped.data[n]) / kTwoPi);
    tup.truth = std::move(truth);
    tup.wrapped = std::move(wrapped);
    out.push_back(std::move(tup));
  }
  return out;
}

}  // namespace phz::datagen
