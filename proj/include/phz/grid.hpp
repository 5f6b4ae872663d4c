#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace phz {

// Thrown when an iterative numerical procedure diverges (non-finite loss,
// singular normal equations, ...). The CLI maps it to its own exit code.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Dense row-major 2D field of real scalars. Phase values are radians.
struct Grid2D {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Grid2D() = default;

  Grid2D(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), data(h * w, fill) {
    if (h == 0 || w == 0) throw std::invalid_argument("Grid2D: dimensions must be positive");
  }

  static Grid2D from_data(std::size_t h, std::size_t w, std::vector<double> values) {
    Grid2D g(h, w);
    if (values.size() != h * w)
      throw std::invalid_argument("Grid2D: data length does not match dimensions");
    g.data = std::move(values);
    return g;
  }

  std::size_t size() const { return data.size(); }

  double& at(std::size_t i, std::size_t j) { return data[i * width + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * width + j]; }

  double* row(std::size_t i) { return data.data() + i * width; }
  const double* row(std::size_t i) const { return data.data() + i * width; }

  bool same_shape(const Grid2D& o) const { return height == o.height && width == o.width; }
};

inline void require_same_shape(const Grid2D& a, const Grid2D& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

inline bool all_finite(const Grid2D& g) {
  for (double v : g.data)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Forward-difference field. gx holds horizontal differences (zero last
/// column), gy vertical ones (zero last row); both match the source shape.
struct GradientField {
  Grid2D gx;
  Grid2D gy;

  std::size_t height() const { return gx.height; }
  std::size_t width() const { return gx.width; }
};

/// Residual bounds for the adaptive weight law. Weights are reciprocals of
/// residual magnitudes clamped to [eps_min, eps_max].
struct WeightBounds {
  double eps_min = 0.1;
  double eps_max = 8.0;

  WeightBounds() = default;
  WeightBounds(double lo, double hi) : eps_min(lo), eps_max(hi) { validate(); }

  void validate() const {
    if (!(eps_min > 0.0) || !(eps_max > eps_min))
      throw std::invalid_argument("WeightBounds: need 0 < eps_min < eps_max");
  }
};

}  // namespace phz
