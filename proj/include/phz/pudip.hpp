#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phz/core.hpp"
#include "phz/grid.hpp"
#include "phz/io.hpp"
#include "phz/nn/adam.hpp"
#include "phz/nn/graph.hpp"
#include "phz/nn/tensor.hpp"
#include "phz/rng.hpp"

namespace phz::pudip {

enum class OffsetMode { MinSubtract, CornerMeanSubtract };

/// Shape of the untrained generator: an hourglass with strided-convolution
/// encoder stages, bilinear-upsampling decoder stages and 1x1-convolution
/// skip branches taken from each encoder stage input.
struct GeneratorConfig {
  int input_channels = 32;
  int stages = 5;
  int body_channels = 128;
  int skip_channels = 4;
  OffsetMode offset_mode = OffsetMode::MinSubtract;
  std::size_t corner_h = 30;
  std::size_t corner_w = 30;

  void validate() const {
    if (input_channels < 1 || stages < 1 || body_channels < 1 || skip_channels < 1)
      throw std::invalid_argument("GeneratorConfig: counts must be positive");
    if (stages > 16) throw std::invalid_argument("GeneratorConfig: stages out of range");
    if (offset_mode == OffsetMode::CornerMeanSubtract && (corner_h == 0 || corner_w == 0))
      throw std::invalid_argument("GeneratorConfig: empty corner window");
  }
};

struct TrainConfig {
  int iterations = 1000;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  WeightBounds weight_bounds{0.1, 8.0};
  int refresh_every = 100;  // weight-law refresh period, in iterations
  double delta = 1e-18;     // smoothing inside the loss square root
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be positive");
    if (refresh_every < 1 || refresh_every > iterations)
      throw std::invalid_argument("TrainConfig: need 1 <= refresh_every <= iterations");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("TrainConfig: delta must be positive");
    weight_bounds.validate();
  }
};

struct RunReport {
  std::vector<double> loss_trace;    // one entry per iteration
  std::vector<int> refresh_iters;    // iterations where the weights were recomputed
  Grid2D phi_hat;                    // raw generator output, input-sized
  Grid2D phi_tilde;                  // after the congruence projection
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  TrainConfig train;
};

namespace detail {

struct ConvParam {
  nn::Tensor k, b;
};
struct NormParam {
  nn::Tensor gamma, beta;
};

struct EncStage {
  ConvParam conv1, conv2;
  NormParam bn1, bn2;
  nn::Tensor alpha1, alpha2;
  ConvParam skip;
};

struct DecStage {
  NormParam bn_up;
  ConvParam conv1, conv2;
  NormParam bn1, bn2;
  nn::Tensor alpha1, alpha2;
};

inline nn::Tensor make_conv_kernel(rng::Rand& rnd, std::size_t out_c, std::size_t in_c,
                                   std::size_t k) {
  nn::Tensor t = nn::Tensor::zeros({out_c, in_c, k, k}, true);
  double bound = 1.0 / std::sqrt(static_cast<double>(in_c * k * k));
  for (double& v : t.data) v = rnd.uniform(-bound, bound);
  return t;
}

}  // namespace detail

/// The generator network with its parameter store. Parameters live in the
/// struct; every forward pass binds them into a fresh graph as leaves.
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::size_t height, std::size_t width, std::uint64_t seed)
      : cfg_(cfg), height_(height), width_(width) {
    cfg_.validate();
    std::size_t div = std::size_t{1} << cfg_.stages;
    if (height % div != 0 || width % div != 0)
      throw std::invalid_argument("Generator: spatial dims must divide by 2^stages");
    if ((height >> cfg_.stages) == 0 || (width >> cfg_.stages) == 0)
      throw std::invalid_argument("Generator: too many stages for this size");
    rng::Rand rnd(rng::mix(seed, 0x9a7a11ull));
    const auto B = static_cast<std::size_t>(cfg_.body_channels);
    const auto K = static_cast<std::size_t>(cfg_.skip_channels);
    const auto C = static_cast<std::size_t>(cfg_.input_channels);
    for (int s = 0; s < cfg_.stages; ++s) {
      detail::EncStage e;
      std::size_t in_c = s == 0 ? C : B;
      e.conv1 = {detail::make_conv_kernel(rnd, B, in_c, 3), nn::Tensor::zeros({B}, true)};
      e.bn1 = {nn::Tensor::full({B}, 1.0, true), nn::Tensor::zeros({B}, true)};
      e.alpha1 = nn::Tensor::full({1}, 0.25, true);
      e.conv2 = {detail::make_conv_kernel(rnd, B, B, 3), nn::Tensor::zeros({B}, true)};
      e.bn2 = {nn::Tensor::full({B}, 1.0, true), nn::Tensor::zeros({B}, true)};
      e.alpha2 = nn::Tensor::full({1}, 0.25, true);
      e.skip = {detail::make_conv_kernel(rnd, K, in_c, 1), nn::Tensor::zeros({K}, true)};
      enc_.push_back(std::move(e));
    }
    for (int s = 0; s < cfg_.stages; ++s) {
      detail::DecStage d;
      d.bn_up = {nn::Tensor::full({B}, 1.0, true), nn::Tensor::zeros({B}, true)};
      d.conv1 = {detail::make_conv_kernel(rnd, B, B + K, 3), nn::Tensor::zeros({B}, true)};
      d.bn1 = {nn::Tensor::full({B}, 1.0, true), nn::Tensor::zeros({B}, true)};
      d.alpha1 = nn::Tensor::full({1}, 0.25, true);
      d.conv2 = {detail::make_conv_kernel(rnd, B, B, 3), nn::Tensor::zeros({B}, true)};
      d.bn2 = {nn::Tensor::full({B}, 1.0, true), nn::Tensor::zeros({B}, true)};
      d.alpha2 = nn::Tensor::full({1}, 0.25, true);
      dec_.push_back(std::move(d));
    }
    head_ = {detail::make_conv_kernel(rnd, 1, B, 1), nn::Tensor::zeros({1}, true)};
    collect_params();
  }

  const GeneratorConfig& config() const { return cfg_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  std::vector<nn::Tensor*>& parameters() { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }

  /// Builds the forward graph; binds records (parameter, node id) pairs for
  /// pulling gradients back after backward().
  int forward(nn::Graph& g, const nn::Tensor& z,
              std::vector<std::pair<nn::Tensor*, int>>& binds) {
    binds.clear();
    auto bind = [&](nn::Tensor& t) {
      int id = g.leaf(t);
      binds.emplace_back(&t, id);
      return id;
    };
    if (z.shape.size() != 3 || z.shape[0] != static_cast<std::size_t>(cfg_.input_channels) ||
        z.shape[1] != height_ || z.shape[2] != width_)
      throw std::invalid_argument("Generator: input shape mismatch");
    int x = g.leaf(z);
    std::vector<int> skips;
    for (auto& e : enc_) {
      skips.push_back(g.conv2d(x, bind(e.skip.k), bind(e.skip.b), 1, 0));
      x = g.conv2d(x, bind(e.conv1.k), bind(e.conv1.b), 2, 1);
      x = g.batch_norm(x, bind(e.bn1.gamma), bind(e.bn1.beta));
      x = g.prelu(x, bind(e.alpha1));
      x = g.conv2d(x, bind(e.conv2.k), bind(e.conv2.b), 1, 1);
      x = g.batch_norm(x, bind(e.bn2.gamma), bind(e.bn2.beta));
      x = g.prelu(x, bind(e.alpha2));
    }
    for (std::size_t t = 0; t < dec_.size(); ++t) {
      auto& d = dec_[t];
      x = g.upsample_bilinear_2x(x);
      x = g.batch_norm(x, bind(d.bn_up.gamma), bind(d.bn_up.beta));
      x = g.concat(x, skips[dec_.size() - 1 - t]);
      x = g.conv2d(x, bind(d.conv1.k), bind(d.conv1.b), 1, 1);
      x = g.batch_norm(x, bind(d.bn1.gamma), bind(d.bn1.beta));
      x = g.prelu(x, bind(d.alpha1));
      x = g.conv2d(x, bind(d.conv2.k), bind(d.conv2.b), 1, 1);
      x = g.batch_norm(x, bind(d.bn2.gamma), bind(d.bn2.beta));
      x = g.prelu(x, bind(d.alpha2));
    }
    x = g.conv2d(x, bind(head_.k), bind(head_.b), 1, 0);
    if (cfg_.offset_mode == OffsetMode::MinSubtract)
      x = g.subtract_min(x);
    else
      x = g.subtract_corner_mean(x, cfg_.corner_h, cfg_.corner_w);
    return x;
  }

  std::vector<std::pair<std::string, const nn::Tensor*>> named_parameters() const {
    std::vector<std::pair<std::string, const nn::Tensor*>> out;
    out.reserve(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) out.emplace_back(names_[i], params_[i]);
    return out;
  }

 private:
  GeneratorConfig cfg_;
  std::size_t height_, width_;
  std::vector<detail::EncStage> enc_;
  std::vector<detail::DecStage> dec_;
  detail::ConvParam head_;
  std::vector<nn::Tensor*> params_;
  std::vector<std::string> names_;

  void collect_params() {
    auto add = [&](const std::string& name, nn::Tensor& t) {
      names_.push_back(name);
      params_.push_back(&t);
    };
    for (std::size_t s = 0; s < enc_.size(); ++s) {
      std::string p = "enc" + std::to_string(s + 1) + ".";
      add(p + "conv1.k", enc_[s].conv1.k);
      add(p + "conv1.b", enc_[s].conv1.b);
      add(p + "bn1.gamma", enc_[s].bn1.gamma);
      add(p + "bn1.beta", enc_[s].bn1.beta);
      add(p + "alpha1", enc_[s].alpha1);
      add(p + "conv2.k", enc_[s].conv2.k);
      add(p + "conv2.b", enc_[s].conv2.b);
      add(p + "bn2.gamma", enc_[s].bn2.gamma);
      add(p + "bn2.beta", enc_[s].bn2.beta);
      add(p + "alpha2", enc_[s].alpha2);
      add(p + "skip.k", enc_[s].skip.k);
      add(p + "skip.b", enc_[s].skip.b);
    }
    for (std::size_t s = 0; s < dec_.size(); ++s) {
      std::string p = "dec" + std::to_string(s + 1) + ".";
      add(p + "bn_up.gamma", dec_[s].bn_up.gamma);
      add(p + "bn_up.beta", dec_[s].bn_up.beta);
      add(p + "conv1.k", dec_[s].conv1.k);
      add(p + "conv1.b", dec_[s].conv1.b);
      add(p + "bn1.gamma", dec_[s].bn1.gamma);
      add(p + "bn1.beta", dec_[s].bn1.beta);
      add(p + "alpha1", dec_[s].alpha1);
      add(p + "conv2.k", dec_[s].conv2.k);
      add(p + "conv2.b", dec_[s].conv2.b);
      add(p + "bn2.gamma", dec_[s].bn2.gamma);
      add(p + "bn2.beta", dec_[s].bn2.beta);
      add(p + "alpha2", dec_[s].alpha2);
    }
    add("head.k", head_.k);
    add("head.b", head_.b);
  }
};

/// Fixed generator input: channels drawn once from U(0, 0.1).
inline nn::Tensor sample_input(std::uint64_t seed, int channels, std::size_t height,
                               std::size_t width) {
  if (channels < 1) throw std::invalid_argument("sample_input: channels must be positive");
  nn::Tensor z = nn::Tensor::zeros({static_cast<std::size_t>(channels), height, width});
  rng::Rand rnd(rng::mix(seed, 0x17b9ull));
  for (double& v : z.data) v = rnd.uniform(0.0, 0.1);
  return z;
}

namespace detail {

// Pads at the bottom/right by mirror reflection (no edge repeat) up to the
// next multiple of 2^stages.
inline Grid2D pad_reflect(const Grid2D& g, int stages, std::size_t& out_h, std::size_t& out_w) {
  std::size_t div = std::size_t{1} << stages;
  out_h = (g.height + div - 1) / div * div;
  out_w = (g.width + div - 1) / div * div;
  if (out_h > 2 * g.height - 1 || out_w > 2 * g.width - 1)
    throw std::invalid_argument("pad_reflect: grid too small for this stage count");
  if (out_h == g.height && out_w == g.width) return g;
  Grid2D p(out_h, out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    std::size_t si = i < g.height ? i : 2 * g.height - 2 - i;
    for (std::size_t j = 0; j < out_w; ++j) {
      std::size_t sj = j < g.width ? j : 2 * g.width - 2 - j;
      p.at(i, j) = g.at(si, sj);
    }
  }
  return p;
}

inline Grid2D grid_from_output(const nn::Tensor& t) {
  Grid2D g(t.shape[1], t.shape[2]);
  std::copy(t.data.begin(), t.data.end(), g.data.begin());
  return g;
}

}  // namespace detail

/// Untrained-generator unwrapping: optimizes the generator against the
/// weighted wrapped-gradient data term, refreshing the weights periodically,
/// and projects the final output onto the congruent lattice. Identical seeds
/// and configurations reproduce identical results bit for bit.
inline std::pair<Grid2D, RunReport> unwrap_pudip(const Grid2D& psi, const GeneratorConfig& gcfg,
                                                 const TrainConfig& tcfg) {
  gcfg.validate();
  tcfg.validate();
  auto t_start = std::chrono::steady_clock::now();

  std::size_t ph = 0, pw = 0;
  Grid2D psi_p = detail::pad_reflect(psi, gcfg.stages, ph, pw);

  Generator gen(gcfg, ph, pw, rng::mix(tcfg.seed, 2));
  nn::Tensor z = sample_input(rng::mix(tcfg.seed, 1), gcfg.input_channels, ph, pw);

  nn::AdamState adam;
  adam.lr = tcfg.lr;
  adam.beta1 = tcfg.beta1;
  adam.beta2 = tcfg.beta2;

  RunReport report;
  report.seed = tcfg.seed;
  report.generator = gcfg;
  report.train = tcfg;

  Grid2D w(ph, pw, 1.0);
  nn::Tensor final_output;
  std::vector<std::pair<nn::Tensor*, int>> binds;
  for (int iter = 0; iter < tcfg.iterations; ++iter) {
    nn::Graph g;
    int y = gen.forward(g, z, binds);
    if (iter % tcfg.refresh_every == 0) {
      // Weight refresh from the current output; the weights then stay
      // constant (no gradient flows through them) until the next refresh.
      w = adaptive_weights(detail::grid_from_output(g.value(y)), psi_p, tcfg.weight_bounds);
      report.refresh_iters.push_back(iter);
    }
    int loss = g.pudip_loss(y, psi_p, w, tcfg.delta);
    double lv = g.value(loss).data[0];
    report.loss_trace.push_back(lv);
    if (!std::isfinite(lv))
      throw numerical_error("unwrap_pudip: non-finite loss at iteration " + std::to_string(iter));
    if (iter == tcfg.iterations - 1) final_output = g.value(y);
    g.backward(loss);
    for (auto& [param, node] : binds) {
      auto gr = g.grad_of(node);
      param->grad.assign(gr.begin(), gr.end());
    }
    adam_step(std::span<nn::Tensor* const>(gen.parameters()), adam);
  }

  Grid2D phi_hat_p = detail::grid_from_output(final_output);
  Grid2D phi_hat(psi.height, psi.width);
  for (std::size_t i = 0; i < psi.height; ++i)
    for (std::size_t j = 0; j < psi.width; ++j) phi_hat.at(i, j) = phi_hat_p.at(i, j);
  report.phi_hat = phi_hat;
  report.phi_tilde = congruence(psi, phi_hat);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             t_start)
                       .count();
  return {report.phi_tilde, report};
}

/// Serializes the loss trace: "iteration,loss" per line. Deterministic for
/// fixed seeds and configs.
inline std::string format_loss_log(const RunReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.loss_trace.size(); ++i) {
    out += std::to_string(i);
    out.push_back(',');
    out += io::format_double(r.loss_trace[i]);
    out.push_back('\n');
  }
  return out;
}

/// Slowly varying background removal for real acquisitions: flat pixels are
/// detected with a 3x3 standard-deviation filter (windows shrink at borders),
/// a total-degree bivariate polynomial is fitted to them over coordinates
/// normalized to [-1, 1], and the fit is subtracted everywhere.
inline Grid2D remove_background(const Grid2D& phi, double t_sigma, int poly_degree = 3) {
  if (!(t_sigma > 0.0)) throw std::invalid_argument("remove_background: t_sigma must be positive");
  if (poly_degree < 1 || poly_degree > 6)
    throw std::invalid_argument("remove_background: degree out of range");
  const std::size_t H = phi.height, W = phi.width;
  std::vector<std::uint8_t> flat(phi.size(), 0);
  std::size_t n_flat = 0;
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      double sum = 0.0, sum2 = 0.0;
      int cnt = 0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i) + di;
          std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j) + dj;
          if (ii < 0 || jj < 0 || ii >= static_cast<std::ptrdiff_t>(H) ||
              jj >= static_cast<std::ptrdiff_t>(W))
            continue;
          double v = phi.at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
          sum += v;
          sum2 += v * v;
          ++cnt;
        }
      }
      double m = sum / cnt;
      double var = std::max(0.0, sum2 / cnt - m * m);
      if (std::sqrt(var) < t_sigma) {
        flat[i * W + j] = 1;
        ++n_flat;
      }
    }
  }
  // Monomial basis x^a y^b with a + b <= degree.
  std::vector<std::pair<int, int>> terms;
  for (int d = 0; d <= poly_degree; ++d)
    for (int a = 0; a <= d; ++a) terms.emplace_back(a, d - a);
  const std::size_t T = terms.size();
  if (n_flat < T)
    throw std::invalid_argument("remove_background: too few flat pixels for the fit");
  auto coord = [](std::size_t k, std::size_t n) {
    return n > 1 ? 2.0 * static_cast<double>(k) / static_cast<double>(n - 1) - 1.0 : 0.0;
  };
  std::vector<double> ata(T * T, 0.0), atb(T, 0.0), v(T);
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      if (!flat[i * W + j]) continue;
      double y = coord(i, H), x = coord(j, W);
      for (std::size_t t = 0; t < T; ++t)
        v[t] = std::pow(x, terms[t].first) * std::pow(y, terms[t].second);
      for (std::size_t a = 0; a < T; ++a) {
        for (std::size_t b = a; b < T; ++b) ata[a * T + b] += v[a] * v[b];
        atb[a] += v[a] * phi.at(i, j);
      }
    }
  }
  for (std::size_t a = 0; a < T; ++a)
    for (std::size_t b = 0; b < a; ++b) ata[a * T + b] = ata[b * T + a];
  // Cholesky solve of the normal equations.
  std::vector<double> L(T * T, 0.0);
  for (std::size_t a = 0; a < T; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = ata[a * T + b];
      for (std::size_t k = 0; k < b; ++k) s -= L[a * T + k] * L[b * T + k];
      if (a == b) {
        if (!(s > 0.0)) throw numerical_error("remove_background: degenerate fit");
        L[a * T + a] = std::sqrt(s);
      } else {
        L[a * T + b] = s / L[b * T + b];
      }
    }
  }
  std::vector<double> yv(T), c(T);
  for (std::size_t a = 0; a < T; ++a) {
    double s = atb[a];
    for (std::size_t k = 0; k < a; ++k) s -= L[a * T + k] * yv[k];
    yv[a] = s / L[a * T + a];
  }
  for (std::size_t a = T; a-- > 0;) {
    double s = yv[a];
    for (std::size_t k = a + 1; k < T; ++k) s -= L[k * T + a] * c[k];
    c[a] = s / L[a * T + a];
  }
  Grid2D out(H, W);
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      double y = coord(i, H), x = coord(j, W);
      double fit = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        fit += c[t] * std::pow(x, terms[t].first) * std::pow(y, terms[t].second);
      out.at(i, j) = phi.at(i, j) - fit;
    }
  }
  return out;
}

/// Foreground mask at a fraction of the maximum value.
inline Grid2D segment_threshold(const Grid2D& phi, double fraction = 0.2) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("segment_threshold: fraction must lie in (0, 1)");
  double peak = phi.data[0];
  for (double v : phi.data) peak = std::max(peak, v);
  Grid2D mask(phi.height, phi.width);
  double cut = fraction * peak;
  for (std::size_t n = 0; n < phi.size(); ++n) mask.data[n] = phi.data[n] >= cut ? 1.0 : 0.0;
  return mask;
}

}  // namespace phz::pudip
