// Classical unwrappers: path integration, spectral least squares, branch
// cuts, reweighted least squares.

#include <gtest/gtest.h>

#include <cmath>

#include "phz/baselines.hpp"
#include "phz/core.hpp"
#include "phz/datagen.hpp"
#include "phz/metrics.hpp"
#include "phz/rng.hpp"

using phz::Grid2D;
using phz::kPi;
using phz::kTwoPi;
namespace bl = phz::baselines;
namespace dg = phz::datagen;

namespace {

// Smooth residue-free field: bicubic inflation of a small random matrix.
Grid2D smooth_field(std::uint64_t seed, std::size_t size, double scale) {
  phz::rng::Rand rand(phz::rng::mix(seed, 0xf00dull));
  Grid2D m(5, 5);
  for (double& v : m.data) v = scale * rand.uniform();
  return dg::bicubic_upsample(m, size, size);
}

// Single phase vortex: winding angle around a center placed off the lattice.
Grid2D vortex_field(std::size_t size, double cy, double cx) {
  Grid2D psi(size, size);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j)
      psi.at(i, j) =
          phz::wrap_scalar(std::atan2(static_cast<double>(i) - cy, static_cast<double>(j) - cx));
  return psi;
}

double max_abs_diff_up_to_constant(const Grid2D& a, const Grid2D& b) {
  double mean = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) mean += a.data[n] - b.data[n];
  mean /= static_cast<double>(a.size());
  double worst = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    worst = std::max(worst, std::abs(a.data[n] - b.data[n] - mean));
  return worst;
}

}  // namespace

TEST(Itoh1d, RecoversSlopeBelowPi) {
  std::vector<double> truth(10);
  for (std::size_t k = 0; k < truth.size(); ++k) truth[k] = 0.8 * static_cast<double>(k);
  std::vector<double> psi(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) psi[k] = phz::wrap_scalar(truth[k]);
  auto out = bl::unwrap_itoh_1d(psi);
  for (std::size_t k = 0; k < truth.size(); ++k) ASSERT_NEAR(out[k], truth[k], 1e-12);
}

TEST(Itoh1d, RecoversShapeUpToFirstSampleWraps) {
  std::vector<double> truth(12);
  for (std::size_t k = 0; k < truth.size(); ++k) truth[k] = 10.0 + 0.9 * static_cast<double>(k);
  std::vector<double> psi(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) psi[k] = phz::wrap_scalar(truth[k]);
  auto out = bl::unwrap_itoh_1d(psi);
  for (std::size_t k = 0; k < truth.size(); ++k)
    ASSERT_NEAR(out[k] - out[0], truth[k] - truth[0], 1e-12);
}

TEST(Itoh1d, AliasesSlopesAbovePi) {
  std::vector<double> psi(8);
  for (std::size_t k = 0; k < psi.size(); ++k)
    psi[k] = phz::wrap_scalar(3.3 * static_cast<double>(k));
  auto out = bl::unwrap_itoh_1d(psi);
  // The wrapped difference of a 3.3 rad/step ramp is 3.3 - 2 pi: the
  // reconstruction slides down instead of up.
  EXPECT_NEAR(out[7] - out[0], 7.0 * (3.3 - kTwoPi), 1e-12);
  EXPECT_THROW(bl::unwrap_itoh_1d(std::span<const double>()), std::invalid_argument);
}

TEST(Itoh2d, ExactOnCompliantField) {
  dg::EllipseSpec spec;
  spec.radius_y = 12.0;
  spec.radius_x = 14.0;
  spec.amplitude = 8.0;
  auto [truth, psi] = dg::gen_sample_b(spec, 32, 32);
  Grid2D viol = phz::itoh_violations(truth);
  ASSERT_EQ(*std::max_element(viol.data.begin(), viol.data.end()), 0.0);
  Grid2D out = bl::unwrap_itoh(psi);
  EXPECT_GT(phz::metrics::rsnr(out, truth).raw_db, 100.0);
  EXPECT_LT(phz::metrics::rewrap_error(out, psi), 1e-10);
}

TEST(LsDct, SolvesTheNormalEquations) {
  dg::EllipseSpec spec;
  spec.radius_y = 18.0;
  spec.radius_x = 22.0;
  auto [truth, psi] = dg::gen_sample_e(spec, 8.0, 41, 48, 48);
  phz::GradientField g = phz::wrapped_gradient(psi);
  Grid2D phi = bl::ls_dct_solve(g);
  // Residual of Laplacian(phi) = div g, infinity norm, relative to the data.
  phz::GradientField r = phz::forward_gradient(phi);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    r.gx.data[n] -= g.gx.data[n];
    r.gy.data[n] -= g.gy.data[n];
  }
  Grid2D res = bl::detail::difference_adjoint(r);
  double worst = 0.0, data = 0.0;
  for (std::size_t n = 0; n < psi.size(); ++n) {
    worst = std::max(worst, std::abs(res.data[n]));
    data = std::max({data, std::abs(g.gx.data[n]), std::abs(g.gy.data[n])});
  }
  EXPECT_LT(worst, 1e-8 * std::max(1.0, data));
  // Gauge: the minimum-norm representative has zero mean.
  double mean = 0.0;
  for (double v : phi.data) mean += v;
  EXPECT_NEAR(mean / static_cast<double>(phi.size()), 0.0, 1e-9);
}

TEST(LsDct, ReproducesIntegrableGradients) {
  // When g is an exact forward-difference field the minimizer is its
  // antiderivative, up to the mean-zero gauge.
  Grid2D f = smooth_field(5, 24, 6.0);
  Grid2D wide = dg::bicubic_upsample(f, 24, 20);  // non-square on purpose
  phz::GradientField g = phz::forward_gradient(wide);
  Grid2D phi = bl::ls_dct_solve(g);
  double mean = 0.0;
  for (double v : wide.data) mean += v;
  mean /= static_cast<double>(wide.size());
  for (std::size_t n = 0; n < wide.size(); ++n)
    ASSERT_NEAR(phi.data[n], wide.data[n] - mean, 1e-8);
}

TEST(LsDct, ExactRecoveryOnCompliantField) {
  dg::EllipseSpec spec;
  spec.radius_y = 12.0;
  spec.radius_x = 14.0;
  spec.amplitude = 8.0;
  auto [truth, psi] = dg::gen_sample_b(spec, 32, 32);
  Grid2D out = bl::unwrap_ls_dct(psi);
  EXPECT_GT(phz::metrics::rsnr(out, truth).raw_db, 100.0);
  EXPECT_LT(phz::metrics::rewrap_error(out, psi), 1e-10);
}

TEST(LsDct, DegenerateStripFallsBackToPathIntegration) {
  Grid2D psi(1, 9);
  for (std::size_t j = 0; j < 9; ++j) psi.at(0, j) = phz::wrap_scalar(1.1 * static_cast<double>(j));
  Grid2D out = bl::unwrap_ls_dct(psi);
  auto line = bl::unwrap_itoh_1d(std::span<const double>(psi.data));
  for (std::size_t j = 0; j < 9; ++j) ASSERT_EQ(out.at(0, j), line[j]);
}

TEST(Residues, SingleVortexCarriesUnitCharge) {
  Grid2D psi = vortex_field(9, 4.3, 4.3);
  bl::ResidueMap r = bl::residues(psi);
  int nonzero = 0, total = 0;
  for (int q : r.charge) {
    if (q != 0) ++nonzero;
    total += std::abs(q);
  }
  EXPECT_EQ(nonzero, 1);
  EXPECT_EQ(total, 1);
  EXPECT_NE(r.at(4, 4), 0);
}

TEST(Residues, SmoothFieldsAreResidueFree) {
  dg::EllipseSpec spec;
  spec.radius_y = 12.0;
  spec.radius_x = 14.0;
  auto [truth, psi] = dg::gen_sample_b(spec, 32, 32);
  bl::ResidueMap r = bl::residues(psi);
  for (int q : r.charge) ASSERT_EQ(q, 0);
}

TEST(Residues, ConservedUnderSmoothPerturbationWithinAliasingMargin) {
  // A vortex dipole carries residues that survive smooth additions. The
  // conservation argument needs a margin: as long as no wrapped edge step of
  // the base field sits closer to +-pi than the largest edge step of the
  // bump, the perturbed edges keep their wrap counts, so every 2x2 loop keeps
  // its charge (the bump's own circulation telescopes to zero).
  Grid2D base(32, 32);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 32; ++j)
      base.at(i, j) = std::atan2(static_cast<double>(i) - 10.4, static_cast<double>(j) - 12.3) -
                      std::atan2(static_cast<double>(i) - 22.6, static_cast<double>(j) - 19.7);

  auto max_edge_step = [](const Grid2D& g) {
    phz::GradientField f = phz::forward_gradient(g);
    double worst = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n)
      worst = std::max({worst, std::abs(phz::wrap_scalar(f.gx.data[n])),
                        std::abs(phz::wrap_scalar(f.gy.data[n]))});
    return worst;
  };
  const double margin = phz::kPi - max_edge_step(base);
  ASSERT_GT(margin, 0.25) << "fixture must keep wrapped steps away from +-pi";

  bl::ResidueMap base_map = bl::residues(phz::wrap_grid(base));
  int count = 0, net = 0;
  for (int q : base_map.charge) {
    count += std::abs(q);
    net += q;
  }
  ASSERT_EQ(count, 2) << "dipole fixture must carry two residues";
  ASSERT_EQ(net, 0);

  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    Grid2D bump = smooth_field(seed, 32, 1.0);
    double bump_step = max_edge_step(bump);
    ASSERT_GT(bump_step, 0.0);
    const double gain = 0.8 * margin / bump_step;
    Grid2D shifted = base;
    for (std::size_t n = 0; n < shifted.size(); ++n)
      shifted.data[n] += gain * bump.data[n];
    bl::ResidueMap moved = bl::residues(phz::wrap_grid(shifted));
    ASSERT_EQ(moved.charge.size(), base_map.charge.size());
    for (std::size_t n = 0; n < moved.charge.size(); ++n)
      ASSERT_EQ(moved.charge[n], base_map.charge[n]) << "seed " << seed << " cell " << n;
  }
}

TEST(Goldstein, MatchesLsUpToConstantOnResidueFreeFields) {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    Grid2D truth = smooth_field(seed, 48, 9.0);
    Grid2D psi = phz::wrap_grid(truth);
    for (int q : bl::residues(psi).charge) ASSERT_EQ(q, 0);
    Grid2D a = bl::unwrap_goldstein(psi);
    Grid2D b = bl::unwrap_ls_dct(psi);
    EXPECT_LT(max_abs_diff_up_to_constant(a, b), 1e-6) << "seed " << seed;
    EXPECT_LT(phz::metrics::rewrap_error(a, psi), 1e-10);
    EXPECT_GT(phz::metrics::rsnr(a, truth).raw_db, 100.0);
  }
}

TEST(Goldstein, VortexOutputStaysCongruent) {
  Grid2D psi = vortex_field(24, 11.4, 12.2);
  Grid2D out = bl::unwrap_goldstein(psi);
  EXPECT_TRUE(phz::all_finite(out));
  EXPECT_LT(phz::metrics::rewrap_error(out, psi), 1e-10);
}

TEST(Goldstein, HardCropScenarioStaysCongruent) {
  dg::EllipseSpec spec;
  spec.radius_y = 20.0;
  spec.radius_x = 27.0;
  spec.crop_angle = 135.0;
  auto [truth, psi] = dg::gen_sample_b(spec, 64, 64);
  Grid2D out = bl::unwrap_goldstein(psi);
  EXPECT_TRUE(phz::all_finite(out));
  EXPECT_LT(phz::metrics::rewrap_error(out, psi), 1e-10);
}

TEST(Goldstein, ReferenceValidation) {
  Grid2D psi(4, 4, 0.1);
  EXPECT_THROW(bl::unwrap_goldstein(psi, 4, 0), std::invalid_argument);
  EXPECT_THROW(bl::unwrap_goldstein(psi, 0, 7), std::invalid_argument);
}

TEST(Irls, ExactRecoveryOnCompliantField) {
  dg::EllipseSpec spec;
  spec.radius_y = 16.0;
  spec.radius_x = 19.0;
  spec.amplitude = 10.0;
  auto [truth, psi] = dg::gen_sample_b(spec, 48, 48);
  bl::IrlsConfig cfg;
  cfg.outer_iters = 6;
  cfg.cg_iters = 500;
  cfg.cg_tol = 1e-12;
  bl::IrlsReport report;
  Grid2D out = bl::unwrap_irls(psi, cfg, &report);
  EXPECT_GT(phz::metrics::rsnr(out, truth).raw_db, 100.0);
  EXPECT_LT(phz::metrics::rewrap_error(out, psi), 1e-10);
  EXPECT_TRUE(report.cg_converged);
  EXPECT_EQ(report.outer_rounds, 6);
  ASSERT_EQ(report.energy_trace.size(), 6u);
}

TEST(Irls, FrozenWeightSquaredEnergyIsMonotoneOverCg) {
  dg::EllipseSpec spec;
  spec.radius_y = 13.0;
  spec.radius_x = 15.0;
  auto [truth, psi] = dg::gen_sample_e(spec, 12.0, 77, 32, 32);
  bl::IrlsReport report;
  bl::IrlsConfig cfg;
  cfg.outer_iters = 2;
  Grid2D out = bl::unwrap_irls(psi, cfg, &report);
  ASSERT_GE(report.cg_energy_trace.size(), 2u);
  for (std::size_t k = 1; k < report.cg_energy_trace.size(); ++k)
    ASSERT_LE(report.cg_energy_trace[k],
              report.cg_energy_trace[k - 1] * (1.0 + 1e-9) + 1e-12)
        << "cg step " << k;
}

TEST(Irls, DegenerateStripMatchesPathIntegration) {
  Grid2D psi(1, 7);
  for (std::size_t j = 0; j < 7; ++j) psi.at(0, j) = phz::wrap_scalar(0.9 * static_cast<double>(j));
  bl::IrlsReport report;
  Grid2D out = bl::unwrap_irls(psi, {}, &report);
  auto line = bl::unwrap_itoh_1d(std::span<const double>(psi.data));
  for (std::size_t j = 0; j < 7; ++j) ASSERT_EQ(out.at(0, j), line[j]);
  EXPECT_EQ(report.outer_rounds, 0);
}

TEST(Irls, ConfigValidation) {
  Grid2D psi(4, 4, 0.1);
  bl::IrlsConfig cfg;
  cfg.outer_iters = 0;
  EXPECT_THROW(bl::unwrap_irls(psi, cfg), std::invalid_argument);
  cfg.outer_iters = 10;
  cfg.cg_tol = 0.0;
  EXPECT_THROW(bl::unwrap_irls(psi, cfg), std::invalid_argument);
}
