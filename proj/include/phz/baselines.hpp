#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "phz/core.hpp"
#include "phz/grid.hpp"

namespace phz::baselines {

/// Cumulative sum of wrapped differences along a sequence; exact whenever the
/// true signal has no jump of pi or more between neighbors.
inline std::vector<double> unwrap_itoh_1d(std::span<const double> psi) {
  if (psi.empty()) throw std::invalid_argument("unwrap_itoh_1d: empty input");
  std::vector<double> out(psi.size());
  out[0] = psi[0];
  for (std::size_t k = 1; k < psi.size(); ++k)
    out[k] = out[k - 1] + wrap_scalar(psi[k] - psi[k - 1]);
  return out;
}

/// Raster-path 2D integration: first column top-down, then each row leftward
/// to rightward. Exact on gradients that satisfy the per-pixel norm bound.
inline Grid2D unwrap_itoh(const Grid2D& psi) {
  Grid2D out(psi.height, psi.width);
  out.at(0, 0) = psi.at(0, 0);
  for (std::size_t i = 1; i < psi.height; ++i)
    out.at(i, 0) = out.at(i - 1, 0) + wrap_scalar(psi.at(i, 0) - psi.at(i - 1, 0));
  for (std::size_t i = 0; i < psi.height; ++i)
    for (std::size_t j = 1; j < psi.width; ++j)
      out.at(i, j) = out.at(i, j - 1) + wrap_scalar(psi.at(i, j) - psi.at(i, j - 1));
  return out;
}

namespace detail {

// Unnormalized DCT-II synthesis/analysis tables: c[k*n+i] = cos(pi*(i+0.5)*k/n).
struct CosTable {
  std::size_t n = 0;
  std::vector<double> c;

  explicit CosTable(std::size_t size) : n(size), c(size * size) {
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        c[k * n + i] = std::cos(kPi * (static_cast<double>(i) + 0.5) * static_cast<double>(k) /
                                static_cast<double>(n));
  }
};

// Analysis along columns: out[k][j] = sum_i table[k][i] * src[i][j].
inline Grid2D dct_cols(const CosTable& t, const Grid2D& src) {
  Grid2D out(src.height, src.width, 0.0);
  for (std::size_t k = 0; k < src.height; ++k) {
    const double* ck = t.c.data() + k * t.n;
    double* dst = out.row(k);
    for (std::size_t i = 0; i < src.height; ++i) {
      double w = ck[i];
      const double* s = src.row(i);
      for (std::size_t j = 0; j < src.width; ++j) dst[j] += w * s[j];
    }
  }
  return out;
}

// Synthesis along columns: out[i][j] = (a[0][j] + 2*sum_{k>=1} a[k][j]*table[k][i]) / n.
inline Grid2D idct_cols(const CosTable& t, const Grid2D& a) {
  Grid2D out(a.height, a.width, 0.0);
  for (std::size_t i = 0; i < a.height; ++i) {
    double* dst = out.row(i);
    const double* a0 = a.row(0);
    for (std::size_t j = 0; j < a.width; ++j) dst[j] = a0[j];
  }
  for (std::size_t k = 1; k < a.height; ++k) {
    const double* ck = t.c.data() + k * t.n;
    const double* ak = a.row(k);
    for (std::size_t i = 0; i < a.height; ++i) {
      double w = 2.0 * ck[i];
      double* dst = out.row(i);
      for (std::size_t j = 0; j < a.width; ++j) dst[j] += w * ak[j];
    }
  }
  double inv = 1.0 / static_cast<double>(a.height);
  for (double& v : out.data) v *= inv;
  return out;
}

inline Grid2D transpose(const Grid2D& g) {
  Grid2D out(g.width, g.height);
  for (std::size_t i = 0; i < g.height; ++i)
    for (std::size_t j = 0; j < g.width; ++j) out.at(j, i) = g.at(i, j);
  return out;
}

// Divergence-style adjoint of the forward-difference pair: b = Dx'gx + Dy'gy.
// Relies on gx having a zero last column and gy a zero last row.
inline Grid2D difference_adjoint(const GradientField& g) {
  Grid2D b(g.height(), g.width(), 0.0);
  for (std::size_t i = 0; i < b.height; ++i) {
    const double* gx = g.gx.row(i);
    double* dst = b.row(i);
    dst[0] -= gx[0];
    for (std::size_t j = 1; j < b.width; ++j) dst[j] += gx[j - 1] - gx[j];
  }
  for (std::size_t j = 0; j < b.width; ++j) b.at(0, j) -= g.gy.at(0, j);
  for (std::size_t i = 1; i < b.height; ++i) {
    const double* prev = g.gy.row(i - 1);
    const double* cur = g.gy.row(i);
    double* dst = b.row(i);
    for (std::size_t j = 0; j < b.width; ++j) dst[j] += prev[j] - cur[j];
  }
  return b;
}

}  // namespace detail

/// Exact minimum-norm solution of the unweighted least-squares problem
/// min ||grad(phi) - g||^2 via the cosine-basis eigendecomposition of the
/// Neumann Laplacian. The returned field has zero mean (gauge choice).
inline Grid2D ls_dct_solve(const GradientField& g) {
  const std::size_t h = g.height(), w = g.width();
  Grid2D b = detail::difference_adjoint(g);
  detail::CosTable th(h), tw(w);
  // 2D analysis: rows of the column pass are transformed along width.
  Grid2D coef = detail::transpose(detail::dct_cols(tw, detail::transpose(detail::dct_cols(th, b))));
  std::vector<double> ly(h), lx(w);
  for (std::size_t k = 0; k < h; ++k)
    ly[k] = 2.0 - 2.0 * std::cos(kPi * static_cast<double>(k) / static_cast<double>(h));
  for (std::size_t k = 0; k < w; ++k)
    lx[k] = 2.0 - 2.0 * std::cos(kPi * static_cast<double>(k) / static_cast<double>(w));
  for (std::size_t ky = 0; ky < h; ++ky)
    for (std::size_t kx = 0; kx < w; ++kx) {
      if (ky == 0 && kx == 0) {
        coef.at(0, 0) = 0.0;  // constant mode is unobservable; pin the mean to zero
        continue;
      }
      coef.at(ky, kx) /= ly[ky] + lx[kx];
    }
  return detail::transpose(detail::idct_cols(tw, detail::transpose(detail::idct_cols(th, coef))));
}

/// Unweighted least-squares unwrapping with the final congruence projection.
inline Grid2D unwrap_ls_dct(const Grid2D& psi) {
  if (psi.height == 1 || psi.width == 1) {
    // Degenerate strip: the cumulative-sum solution is the exact minimizer.
    Grid2D out(psi.height, psi.width);
    auto line = unwrap_itoh_1d(std::span<const double>(psi.data));
    std::copy(line.begin(), line.end(), out.data.begin());
    return out;
  }
  Grid2D phi = ls_dct_solve(wrapped_gradient(psi));
  return congruence(psi, phi);
}

/// Integer charges of elementary 2x2 loops: the wrapped circulation divided
/// by 2pi. Nonzero entries mark rotational inconsistencies of the wrapped
/// gradient field.
struct ResidueMap {
  std::size_t height = 0;  // source height - 1
  std::size_t width = 0;   // source width - 1
  std::vector<int> charge;

  int at(std::size_t i, std::size_t j) const { return charge[i * width + j]; }
};

inline ResidueMap residues(const Grid2D& psi) {
  if (psi.height < 2 || psi.width < 2)
    return ResidueMap{0, 0, {}};
  ResidueMap r{psi.height - 1, psi.width - 1,
               std::vector<int>((psi.height - 1) * (psi.width - 1), 0)};
  for (std::size_t i = 0; i + 1 < psi.height; ++i)
    for (std::size_t j = 0; j + 1 < psi.width; ++j) {
      double s = wrap_scalar(psi.at(i, j + 1) - psi.at(i, j)) +
                 wrap_scalar(psi.at(i + 1, j + 1) - psi.at(i, j + 1)) +
                 wrap_scalar(psi.at(i + 1, j) - psi.at(i + 1, j + 1)) +
                 wrap_scalar(psi.at(i, j) - psi.at(i + 1, j));
      r.charge[i * r.width + j] = static_cast<int>(std::lround(s / kTwoPi));
    }
  return r;
}

namespace detail {

// Branch cuts as blocked unit edges of the pixel graph. block_v[i][j] blocks
// (i,j)-(i+1,j); block_h[i][j] blocks (i,j)-(i,j+1).
struct CutSet {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> block_v;  // (height-1) x width
  std::vector<std::uint8_t> block_h;  // height x (width-1)

  CutSet(std::size_t h, std::size_t w)
      : height(h), width(w), block_v(h > 1 ? (h - 1) * w : 0, 0),
        block_h(w > 1 ? h * (w - 1) : 0, 0) {}

  void cut_v(std::size_t i, std::size_t j) { block_v[i * width + j] = 1; }
  void cut_h(std::size_t i, std::size_t j) { block_h[i * (width - 1) + j] = 1; }
  bool blocked_v(std::size_t i, std::size_t j) const { return block_v[i * width + j] != 0; }
  bool blocked_h(std::size_t i, std::size_t j) const { return block_h[i * (width - 1) + j] != 0; }
};

struct Charge {
  std::size_t i, j;
  int q;
  bool balanced = false;
};

// Blocks the pixel edge crossed when stepping between adjacent residue cells.
inline void cut_between_cells(CutSet& cuts, std::size_t ci, std::size_t cj, int di, int dj) {
  if (dj == 1) cuts.cut_v(ci, cj + 1);
  else if (dj == -1) cuts.cut_v(ci, cj);
  else if (di == 1) cuts.cut_h(ci + 1, cj);
  else cuts.cut_h(ci, cj);
}

// L-shaped dual-lattice path: horizontal leg then vertical leg.
inline void cut_path(CutSet& cuts, std::size_t ai, std::size_t aj, std::size_t bi,
                     std::size_t bj) {
  std::size_t ci = ai, cj = aj;
  while (cj != bj) {
    int dj = cj < bj ? 1 : -1;
    cut_between_cells(cuts, ci, cj, 0, dj);
    cj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(cj) + dj);
  }
  while (ci != bi) {
    int di = ci < bi ? 1 : -1;
    cut_between_cells(cuts, ci, cj, di, 0);
    ci = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(ci) + di);
  }
}

// Shortest discharge of a residue cell across the nearest image border.
inline void cut_to_border(CutSet& cuts, std::size_t ci, std::size_t cj, std::size_t cell_h,
                          std::size_t cell_w) {
  std::size_t up = ci + 1, down = cell_h - ci, left = cj + 1, right = cell_w - cj;
  std::size_t best = std::min(std::min(up, down), std::min(left, right));
  if (best == up) {
    for (std::size_t k = 0; k <= ci; ++k) cuts.cut_h(ci - k, cj);
  } else if (best == left) {
    for (std::size_t k = 0; k <= cj; ++k) cuts.cut_v(ci, cj - k);
  } else if (best == down) {
    for (std::size_t k = ci + 1; k <= cell_h; ++k) cuts.cut_h(k, cj);
  } else {
    for (std::size_t k = cj + 1; k <= cell_w; ++k) cuts.cut_v(ci, k);
  }
}

}  // namespace detail

/// Goldstein-style unwrapping: balance residues with branch cuts, then
/// integrate wrapped differences by breadth-first flood fill that never
/// crosses a cut. Pixels walled off by cuts are filled afterwards by
/// congruence against the nearest reached neighbor. The result is congruent
/// with psi by construction.
inline Grid2D unwrap_goldstein(const Grid2D& psi, std::size_t ref_i = 0, std::size_t ref_j = 0) {
  if (ref_i >= psi.height || ref_j >= psi.width)
    throw std::invalid_argument("unwrap_goldstein: reference outside grid");
  detail::CutSet cuts(psi.height, psi.width);
  ResidueMap res = residues(psi);

  std::vector<detail::Charge> charges;
  for (std::size_t i = 0; i < res.height; ++i)
    for (std::size_t j = 0; j < res.width; ++j)
      if (res.at(i, j) != 0) charges.push_back({i, j, res.at(i, j)});

  // Greedy nearest-neighbor balancing in raster order. A residue pairs with
  // the nearest unbalanced opposite charge unless the border is closer.
  for (std::size_t a = 0; a < charges.size(); ++a) {
    if (charges[a].balanced) continue;
    auto& ca = charges[a];
    std::size_t border = std::min(std::min(ca.i + 1, res.height - ca.i),
                                  std::min(ca.j + 1, res.width - ca.j));
    std::size_t best = static_cast<std::size_t>(-1);
    std::size_t best_d = static_cast<std::size_t>(-1);
    for (std::size_t b = 0; b < charges.size(); ++b) {
      if (b == a || charges[b].balanced || charges[b].q != -ca.q) continue;
      std::size_t d = std::max(ca.i > charges[b].i ? ca.i - charges[b].i : charges[b].i - ca.i,
                               ca.j > charges[b].j ? ca.j - charges[b].j : charges[b].j - ca.j);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    if (best != static_cast<std::size_t>(-1) && best_d <= border) {
      detail::cut_path(cuts, ca.i, ca.j, charges[best].i, charges[best].j);
      ca.balanced = true;
      charges[best].balanced = true;
    } else {
      detail::cut_to_border(cuts, ca.i, ca.j, res.height, res.width);
      ca.balanced = true;
    }
  }

  // Flood fill from the reference, integrating wrapped differences.
  Grid2D out(psi.height, psi.width, 0.0);
  std::vector<std::uint8_t> seen(psi.size(), 0);
  std::queue<std::size_t> q;
  out.at(ref_i, ref_j) = psi.at(ref_i, ref_j);
  seen[ref_i * psi.width + ref_j] = 1;
  q.push(ref_i * psi.width + ref_j);
  auto relax = [&](std::size_t from, std::size_t to) {
    if (seen[to]) return;
    out.data[to] = out.data[from] + wrap_scalar(psi.data[to] - psi.data[from]);
    seen[to] = 1;
    q.push(to);
  };
  while (!q.empty()) {
    std::size_t n = q.front();
    q.pop();
    std::size_t i = n / psi.width, j = n % psi.width;
    if (i > 0 && !cuts.blocked_v(i - 1, j)) relax(n, n - psi.width);
    if (i + 1 < psi.height && !cuts.blocked_v(i, j)) relax(n, n + psi.width);
    if (j > 0 && !cuts.blocked_h(i, j - 1)) relax(n, n - 1);
    if (j + 1 < psi.width && !cuts.blocked_h(i, j)) relax(n, n + 1);
  }

  // Regions enclosed by cuts: grow outward from the reached set ignoring
  // cuts, keeping each new pixel congruent with its already-filled neighbor.
  std::queue<std::size_t> fill;
  for (std::size_t n = 0; n < psi.size(); ++n)
    if (seen[n]) fill.push(n);
  while (!fill.empty()) {
    std::size_t n = fill.front();
    fill.pop();
    std::size_t i = n / psi.width, j = n % psi.width;
    auto grow = [&](std::size_t to) {
      if (seen[to]) return;
      out.data[to] = out.data[n] + wrap_scalar(psi.data[to] - psi.data[n]);
      seen[to] = 1;
      fill.push(to);
    };
    if (i > 0) grow(n - psi.width);
    if (i + 1 < psi.height) grow(n + psi.width);
    if (j > 0) grow(n - 1);
    if (j + 1 < psi.width) grow(n + 1);
  }
  return out;
}

struct IrlsConfig {
  int outer_iters = 10;
  int cg_iters = 300;
  double cg_tol = 1e-10;
  WeightBounds bounds{0.1, 8.0};

  void validate() const {
    if (outer_iters < 1 || cg_iters < 1) throw std::invalid_argument("IrlsConfig: bad iteration counts");
    if (!(cg_tol > 0.0)) throw std::invalid_argument("IrlsConfig: bad tolerance");
    bounds.validate();
  }
};

struct IrlsReport {
  std::vector<double> energy_trace;  // weighted unsquared energy per outer round
  // First outer round only: squared energy with that round's frozen weights
  // (the quadratic CG objective), recorded before CG starts and after every
  // CG iteration. Non-increasing by construction of CG.
  std::vector<double> cg_energy_trace;
  bool cg_converged = true;
  int outer_rounds = 0;
};

namespace detail {

// A x = Dx'(w . Dx x) + Dy'(w . Dy x): normal operator of the weighted
// least-squares objective. Constants span its null space.
inline Grid2D weighted_normal_apply(const Grid2D& x, const Grid2D& w) {
  GradientField g = forward_gradient(x);
  for (std::size_t n = 0; n < x.size(); ++n) {
    g.gx.data[n] *= w.data[n];
    g.gy.data[n] *= w.data[n];
  }
  return difference_adjoint(g);
}

}  // namespace detail

/// Direct solver for the adaptively reweighted data term: alternates the
/// reciprocal-residual weight law with conjugate-gradient solves of the
/// weighted normal equations, then projects onto the congruent lattice.
inline Grid2D unwrap_irls(const Grid2D& psi, const IrlsConfig& cfg = {},
                          IrlsReport* report = nullptr) {
  cfg.validate();
  if (report) *report = IrlsReport{};
  if (psi.height == 1 || psi.width == 1) {
    // The 1D problem is solved exactly by cumulative sums for any weights.
    Grid2D out(psi.height, psi.width);
    auto line = unwrap_itoh_1d(std::span<const double>(psi.data));
    std::copy(line.begin(), line.end(), out.data.begin());
    if (report) report->outer_rounds = 0;
    return out;
  }
  GradientField g = wrapped_gradient(psi);
  Grid2D phi(psi.height, psi.width, 0.0);
  bool converged_all = true;
  std::vector<double> trace;
  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    Grid2D w = adaptive_weights(phi, psi, cfg.bounds);
    GradientField wg = g;
    for (std::size_t n = 0; n < psi.size(); ++n) {
      wg.gx.data[n] *= w.data[n];
      wg.gy.data[n] *= w.data[n];
    }
    Grid2D b = detail::difference_adjoint(wg);
    double b_sq = 0.0;
    for (double v : b.data) b_sq += v * v;

    Grid2D r = detail::weighted_normal_apply(phi, w);
    for (std::size_t n = 0; n < r.size(); ++n) r.data[n] = b.data[n] - r.data[n];
    Grid2D p = r;
    double rs = 0.0;
    for (double v : r.data) rs += v * v;
    double stop = cfg.cg_tol * cfg.cg_tol * b_sq;
    const bool trace_cg = report != nullptr && outer == 0;
    if (trace_cg) report->cg_energy_trace.push_back(weighted_squared_energy(phi, psi, w));
    int it = 0;
    for (; it < cfg.cg_iters && rs > stop; ++it) {
      Grid2D ap = detail::weighted_normal_apply(p, w);
      double pap = 0.0;
      for (std::size_t n = 0; n < p.size(); ++n) pap += p.data[n] * ap.data[n];
      if (!(pap > 0.0)) break;  // numerically exhausted search direction
      double alpha = rs / pap;
      for (std::size_t n = 0; n < phi.size(); ++n) {
        phi.data[n] += alpha * p.data[n];
        r.data[n] -= alpha * ap.data[n];
      }
      double rs_next = 0.0;
      for (double v : r.data) rs_next += v * v;
      double beta = rs_next / rs;
      for (std::size_t n = 0; n < p.size(); ++n) p.data[n] = r.data[n] + beta * p.data[n];
      rs = rs_next;
      if (trace_cg) report->cg_energy_trace.push_back(weighted_squared_energy(phi, psi, w));
    }
    if (rs > stop) converged_all = false;
    trace.push_back(weighted_energy(phi, psi, w));
  }
  if (report) {
    report->energy_trace = std::move(trace);
    report->cg_converged = converged_all;
    report->outer_rounds = cfg.outer_iters;
  }
  return congruence(psi, phi);
}

}  // namespace phz::baselines
