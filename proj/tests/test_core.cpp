// Wrap algebra, finite differences, congruence, weight law, energy.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "phz/core.hpp"
#include "phz/rng.hpp"

using phz::Grid2D;
using phz::kPi;
using phz::kTwoPi;
using phz::wrap_scalar;

TEST(WrapScalar, FixedPoints) {
  EXPECT_EQ(wrap_scalar(0.0), 0.0);
  EXPECT_EQ(wrap_scalar(-kPi), -kPi);
  EXPECT_EQ(wrap_scalar(1.5), 1.5);
  EXPECT_EQ(wrap_scalar(-3.0), -3.0);
  double just_below_pi = std::nextafter(kPi, 0.0);
  EXPECT_EQ(wrap_scalar(just_below_pi), just_below_pi);
}

TEST(WrapScalar, KnownValues) {
  EXPECT_DOUBLE_EQ(wrap_scalar(kPi), -kPi);
  EXPECT_DOUBLE_EQ(wrap_scalar(3.0 * kPi), -kPi);
  EXPECT_NEAR(wrap_scalar(kTwoPi), 0.0, 1e-15);
  EXPECT_NEAR(wrap_scalar(-3.5 * kPi), 0.5 * kPi, 1e-14);
  EXPECT_NEAR(wrap_scalar(5.0), 5.0 - kTwoPi, 1e-15);
  EXPECT_NEAR(wrap_scalar(-9.5), -9.5 + 2.0 * kTwoPi, 1e-14);
}

TEST(WrapScalar, NonFiniteThrows) {
  EXPECT_THROW(wrap_scalar(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  EXPECT_THROW(wrap_scalar(std::numeric_limits<double>::infinity()), std::domain_error);
  EXPECT_THROW(wrap_scalar(-std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST(WrapScalar, RangeAndExactIdempotence) {
  phz::rng::Rand rand(42);
  for (int k = 0; k < 20000; ++k) {
    double x = rand.uniform(-1e3, 1e3);
    double w = wrap_scalar(x);
    ASSERT_GE(w, -kPi);
    ASSERT_LT(w, kPi);
    // Re-wrapping is bit-exact: in-range values take the identity path.
    ASSERT_EQ(wrap_scalar(w), w);
  }
}

TEST(WrapScalar, CongruentModuloTwoPi) {
  phz::rng::Rand rand(7);
  for (int k = 0; k < 5000; ++k) {
    double x = rand.uniform(-50.0, 50.0);
    double w = wrap_scalar(x);
    double turns = (x - w) / kTwoPi;
    ASSERT_NEAR(turns, std::round(turns), 1e-9) << "x=" << x;
  }
}

TEST(WrapGrid, MatchesScalar) {
  Grid2D g = Grid2D::from_data(2, 2, {0.0, 4.0, -4.0, 10.0});
  Grid2D w = phz::wrap_grid(g);
  EXPECT_EQ(w.at(0, 0), wrap_scalar(0.0));
  EXPECT_EQ(w.at(0, 1), wrap_scalar(4.0));
  EXPECT_EQ(w.at(1, 0), wrap_scalar(-4.0));
  EXPECT_EQ(w.at(1, 1), wrap_scalar(10.0));
  Grid2D bad = Grid2D::from_data(1, 1, {std::numeric_limits<double>::quiet_NaN()});
  EXPECT_THROW(phz::wrap_grid(bad), std::domain_error);
}

TEST(ForwardGradient, FrozenSmallCase) {
  Grid2D g = Grid2D::from_data(2, 3, {1, 2, 4, 7, 11, 16});
  phz::GradientField f = phz::forward_gradient(g);
  // Horizontal differences, zero trailing column.
  EXPECT_EQ(f.gx.at(0, 0), 1.0);
  EXPECT_EQ(f.gx.at(0, 1), 2.0);
  EXPECT_EQ(f.gx.at(0, 2), 0.0);
  EXPECT_EQ(f.gx.at(1, 0), 4.0);
  EXPECT_EQ(f.gx.at(1, 1), 5.0);
  EXPECT_EQ(f.gx.at(1, 2), 0.0);
  // Vertical differences, zero trailing row.
  EXPECT_EQ(f.gy.at(0, 0), 6.0);
  EXPECT_EQ(f.gy.at(0, 1), 9.0);
  EXPECT_EQ(f.gy.at(0, 2), 12.0);
  EXPECT_EQ(f.gy.at(1, 0), 0.0);
  EXPECT_EQ(f.gy.at(1, 1), 0.0);
  EXPECT_EQ(f.gy.at(1, 2), 0.0);
}

TEST(WrappedGradient, FrozenSmallCase) {
  Grid2D psi = Grid2D::from_data(2, 3, {0.0, 3.0, -3.0, 1.0, -1.0, 2.0});
  phz::GradientField f = phz::wrapped_gradient(psi);
  EXPECT_NEAR(f.gx.at(0, 0), 3.0, 1e-15);
  EXPECT_NEAR(f.gx.at(0, 1), -6.0 + kTwoPi, 1e-14);
  EXPECT_EQ(f.gx.at(0, 2), 0.0);
  EXPECT_NEAR(f.gx.at(1, 0), -2.0, 1e-15);
  EXPECT_NEAR(f.gx.at(1, 1), 3.0, 1e-15);
  EXPECT_NEAR(f.gy.at(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(f.gy.at(0, 1), -4.0 + kTwoPi, 1e-14);
  EXPECT_NEAR(f.gy.at(0, 2), 5.0 - kTwoPi, 1e-14);
  EXPECT_EQ(f.gy.at(1, 0), 0.0);
}

TEST(ItohViolations, FlagsOnlySuperPiGradients) {
  Grid2D phi = Grid2D::from_data(2, 2, {0.0, 3.0, 1.0, 0.0});
  Grid2D mask = phz::itoh_violations(phi);
  // (0,0): gx=3, gy=1 -> 10 > pi^2. Others stay below.
  EXPECT_EQ(mask.at(0, 0), 1.0);
  EXPECT_EQ(mask.at(0, 1), 0.0);
  EXPECT_EQ(mask.at(1, 0), 0.0);
  EXPECT_EQ(mask.at(1, 1), 0.0);
}

TEST(AdaptiveWeights, ClampBranches) {
  // Build phi/psi whose residual norms hit below, inside, and above the band.
  // psi = 0 so the wrapped measurement gradient vanishes and the residual norm
  // is just |grad(phi)|.
  Grid2D phi = Grid2D::from_data(1, 4, {0.0, 0.05, 0.55, 9.55});
  Grid2D psi(1, 4, 0.0);
  phz::WeightBounds b(0.1, 8.0);
  Grid2D e = phz::gradient_residual_norms(phi, psi);
  EXPECT_NEAR(e.at(0, 0), 0.05, 1e-15);
  EXPECT_NEAR(e.at(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(e.at(0, 2), 9.0, 1e-15);
  EXPECT_EQ(e.at(0, 3), 0.0);
  Grid2D w = phz::adaptive_weights(phi, psi, b);
  EXPECT_EQ(w.at(0, 0), 1.0 / 0.1);   // below eps_min
  EXPECT_NEAR(w.at(0, 1), 2.0, 1e-14);  // interior: 1/e
  EXPECT_EQ(w.at(0, 2), 1.0 / 8.0);   // above eps_max
  EXPECT_EQ(w.at(0, 3), 1.0 / 0.1);
}

TEST(AdaptiveWeights, ExactBoundsTakeClampValue) {
  Grid2D phi = Grid2D::from_data(1, 3, {0.0, 0.1, 8.1});
  Grid2D psi(1, 3, 0.0);
  Grid2D w = phz::adaptive_weights(phi, psi, phz::WeightBounds(0.1, 8.0));
  EXPECT_EQ(w.at(0, 0), 1.0 / 0.1);
  EXPECT_EQ(w.at(0, 1), 1.0 / 8.0);
}

TEST(Congruence, SnapsToMeasurementLattice) {
  Grid2D psi = Grid2D::from_data(1, 1, {0.5});
  Grid2D hat = Grid2D::from_data(1, 1, {10.0});
  Grid2D out = phz::congruence(psi, hat);
  EXPECT_NEAR(out.at(0, 0), 0.5 + 2.0 * kTwoPi, 1e-12);
}

TEST(Congruence, RewrapRecoversPsiAndStaysNearEstimate) {
  phz::rng::Rand rand(11);
  Grid2D psi(4, 5);
  Grid2D hat(4, 5);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    psi.data[n] = rand.uniform(-kPi, kPi);
    hat.data[n] = rand.uniform(-40.0, 40.0);
  }
  Grid2D out = phz::congruence(psi, hat);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    EXPECT_NEAR(wrap_scalar(out.data[n] - psi.data[n]), 0.0, 1e-12);
    EXPECT_LE(std::abs(out.data[n] - hat.data[n]), kPi + 1e-12);
  }
}

TEST(WeightedEnergy, FrozenSmallCase) {
  Grid2D phi = Grid2D::from_data(2, 2, {0.0, 1.0, 2.0, 3.0});
  Grid2D psi(2, 2, 0.0);
  Grid2D w(2, 2, 1.0);
  double e = phz::weighted_energy(phi, psi, w);
  EXPECT_NEAR(e, std::sqrt(5.0) + 2.0 + 1.0, 1e-12);
}

TEST(WeightedEnergy, WeightsScaleTerms) {
  Grid2D phi = Grid2D::from_data(1, 2, {0.0, 2.0});
  Grid2D psi(1, 2, 0.0);
  Grid2D w = Grid2D::from_data(1, 2, {0.25, 7.0});
  // Only the first pixel carries a residual (|gx| = 2); the trailing column
  // contributes nothing regardless of its weight.
  EXPECT_NEAR(phz::weighted_energy(phi, psi, w), 0.5, 1e-15);
}

TEST(GridBasics, ShapeValidation) {
  EXPECT_THROW(Grid2D(0, 3), std::invalid_argument);
  EXPECT_THROW(Grid2D(3, 0), std::invalid_argument);
  EXPECT_THROW(Grid2D::from_data(2, 2, {1.0}), std::invalid_argument);
  Grid2D a(2, 3), b(3, 2);
  EXPECT_THROW(phz::require_same_shape(a, b, "t"), std::invalid_argument);
  EXPECT_THROW(phz::weighted_energy(a, a, b), std::invalid_argument);
  EXPECT_THROW(phz::congruence(a, b), std::invalid_argument);
}
