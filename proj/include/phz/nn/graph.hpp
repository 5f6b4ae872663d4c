#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "phz/core.hpp"
#include "phz/grid.hpp"
#include "phz/nn/conv_kernels.hpp"
#include "phz/nn/tensor.hpp"

namespace phz::nn {

enum class OpKind {
  Leaf,
  Conv2d,
  BatchNorm,
  PRelu,
  Upsample2x,
  Concat,
  Add,
  Mul,
  Sum,
  SubtractMin,
  SubtractCornerMean,
  PudipLoss,
};

/// Define-by-run reverse-mode tape. Every builder computes its forward value
/// immediately; node creation order is the topological order replayed
/// backwards by backward(). Graphs are rebuilt each optimization step.
class Graph {
  struct LossConsts {
    Grid2D w;
    GradientField target;
    double delta = 0.0;
  };

  struct Node {
    OpKind op = OpKind::Leaf;
    std::vector<int> ins;
    Tensor value;
    std::vector<double> grad;
    bool needs_grad = false;
    int stride = 1, pad = 0;
    double eps = 0.0;
    std::size_t win_h = 0, win_w = 0;
    std::size_t argmin = 0;
    std::vector<double> mean, inv_std;  // batch-norm forward statistics
    std::shared_ptr<LossConsts> loss;
  };

 public:
  int leaf(const Tensor& t) {
    Node n;
    n.op = OpKind::Leaf;
    n.value = t;
    n.needs_grad = t.requires_grad;
    return push(std::move(n));
  }

  const Tensor& value(int id) const { return at(id).value; }

  std::span<const double> grad_of(int id) const {
    const Node& n = at(id);
    if (n.grad.size() != n.value.numel())
      throw std::logic_error("grad_of: no gradient recorded for this node");
    return n.grad;
  }

  /// y[o] = bias[o] + sum_c k[o][c] (*) x[c], cross-correlation with the given
  /// stride and symmetric zero padding.
  int conv2d(int x, int k, int b, int stride, int pad) {
    const Tensor& xv = at(x).value;
    const Tensor& kv = at(k).value;
    const Tensor& bv = at(b).value;
    if (xv.shape.size() != 3 || kv.shape.size() != 4 || bv.shape.size() != 1)
      throw std::invalid_argument("conv2d: expected CxHxW input, OxCxKhxKw kernel, O bias");
    if (kv.shape[1] != xv.shape[0]) throw std::invalid_argument("conv2d: channel mismatch");
    if (bv.shape[0] != kv.shape[0]) throw std::invalid_argument("conv2d: bias mismatch");
    if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride or pad");
    const int C = static_cast<int>(xv.shape[0]);
    const int H = static_cast<int>(xv.shape[1]);
    const int W = static_cast<int>(xv.shape[2]);
    const int O = static_cast<int>(kv.shape[0]);
    const int Kh = static_cast<int>(kv.shape[2]);
    const int Kw = static_cast<int>(kv.shape[3]);
    const int Ho = detail::conv_out_dim(H, Kh, stride, pad);
    const int Wo = detail::conv_out_dim(W, Kw, stride, pad);
    if (Ho < 1 || Wo < 1) throw std::invalid_argument("conv2d: empty output");
    Node n;
    n.op = OpKind::Conv2d;
    n.ins = {x, k, b};
    n.stride = stride;
    n.pad = pad;
    n.value = Tensor::zeros({static_cast<std::size_t>(O), static_cast<std::size_t>(Ho),
                             static_cast<std::size_t>(Wo)});
    detail::conv2d_forward(xv.data.data(), C, H, W, kv.data.data(), O, Kh, Kw, bv.data.data(),
                           stride, pad, n.value.data.data(), Ho, Wo);
    return push(std::move(n));
  }

  /// Per-channel normalization over the spatial extent (batch of one), then
  /// affine scale and shift. Population variance, no running statistics.
  int batch_norm(int x, int gamma, int beta, double eps = 1e-5) {
    const Tensor& xv = at(x).value;
    const Tensor& gv = at(gamma).value;
    const Tensor& bv = at(beta).value;
    if (xv.shape.size() != 3) throw std::invalid_argument("batch_norm: expected CxHxW");
    const std::size_t C = xv.shape[0];
    const std::size_t hw = xv.shape[1] * xv.shape[2];
    if (gv.numel() != C || bv.numel() != C)
      throw std::invalid_argument("batch_norm: scale/shift size mismatch");
    if (hw < 2) throw std::invalid_argument("batch_norm: needs at least 2 spatial samples");
    if (!(eps > 0.0)) throw std::invalid_argument("batch_norm: eps must be positive");
    Node n;
    n.op = OpKind::BatchNorm;
    n.ins = {x, gamma, beta};
    n.eps = eps;
    n.value = Tensor::zeros(xv.shape);
    n.mean.resize(C);
    n.inv_std.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = xv.data.data() + c * hw;
      double m = 0.0;
      for (std::size_t t = 0; t < hw; ++t) m += src[t];
      m /= static_cast<double>(hw);
      double var = 0.0;
      for (std::size_t t = 0; t < hw; ++t) {
        double d = src[t] - m;
        var += d * d;
      }
      var /= static_cast<double>(hw);
      double inv = 1.0 / std::sqrt(var + eps);
      n.mean[c] = m;
      n.inv_std[c] = inv;
      double* dst = n.value.data.data() + c * hw;
      const double g = gv.data[c], bb = bv.data[c];
      for (std::size_t t = 0; t < hw; ++t) dst[t] = g * (src[t] - m) * inv + bb;
    }
    return push(std::move(n));
  }

  /// y = x for positive entries, alpha * x otherwise; alpha is one shared
  /// learnable scalar.
  int prelu(int x, int alpha) {
    const Tensor& xv = at(x).value;
    const Tensor& av = at(alpha).value;
    if (av.numel() != 1) throw std::invalid_argument("prelu: alpha must be a scalar tensor");
    Node n;
    n.op = OpKind::PRelu;
    n.ins = {x, alpha};
    n.value = Tensor::zeros(xv.shape);
    const double a = av.data[0];
    for (std::size_t t = 0; t < xv.numel(); ++t) {
      double v = xv.data[t];
      n.value.data[t] = v > 0.0 ? v : a * v;
    }
    return push(std::move(n));
  }

  /// Factor-2 bilinear upsampling with half-pixel sample centers and edge
  /// clamping (align_corners = false convention).
  int upsample_bilinear_2x(int x) {
    const Tensor& xv = at(x).value;
    if (xv.shape.size() != 3) throw std::invalid_argument("upsample: expected CxHxW");
    const std::size_t C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
    Node n;
    n.op = OpKind::Upsample2x;
    n.ins = {x};
    n.value = Tensor::zeros({C, 2 * H, 2 * W});
    auto taps = [](std::size_t out, std::size_t src_dim, std::size_t& i0, std::size_t& i1,
                   double& f) {
      double s = (static_cast<double>(out) + 0.5) * 0.5 - 0.5;
      double fl = std::floor(s);
      f = s - fl;
      auto lo = static_cast<std::ptrdiff_t>(fl);
      auto hi = lo + 1;
      i0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(lo, 0, static_cast<std::ptrdiff_t>(src_dim) - 1));
      i1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(hi, 0, static_cast<std::ptrdiff_t>(src_dim) - 1));
    };
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = xv.data.data() + c * H * W;
      double* dst = n.value.data.data() + c * 4 * H * W;
      for (std::size_t oy = 0; oy < 2 * H; ++oy) {
        std::size_t y0, y1;
        double fy;
        taps(oy, H, y0, y1, fy);
        for (std::size_t ox = 0; ox < 2 * W; ++ox) {
          std::size_t x0, x1;
          double fx;
          taps(ox, W, x0, x1, fx);
          double top = (1.0 - fx) * src[y0 * W + x0] + fx * src[y0 * W + x1];
          double bot = (1.0 - fx) * src[y1 * W + x0] + fx * src[y1 * W + x1];
          dst[oy * 2 * W + ox] = (1.0 - fy) * top + fy * bot;
        }
      }
    }
    return push(std::move(n));
  }

  /// Channel concatenation; all inputs share spatial dimensions.
  int concat(std::span<const int> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    const Tensor& first = at(parts[0]).value;
    if (first.shape.size() != 3) throw std::invalid_argument("concat: expected CxHxW");
    std::size_t C = 0;
    for (int id : parts) {
      const Tensor& v = at(id).value;
      if (v.shape.size() != 3 || v.shape[1] != first.shape[1] || v.shape[2] != first.shape[2])
        throw std::invalid_argument("concat: spatial mismatch");
      C += v.shape[0];
    }
    Node n;
    n.op = OpKind::Concat;
    n.ins.assign(parts.begin(), parts.end());
    n.value = Tensor::zeros({C, first.shape[1], first.shape[2]});
    std::size_t off = 0;
    for (int id : parts) {
      const Tensor& v = at(id).value;
      std::copy(v.data.begin(), v.data.end(), n.value.data.begin() + off);
      off += v.numel();
    }
    return push(std::move(n));
  }

  int concat(int a, int b) {
    int parts[2] = {a, b};
    return concat(std::span<const int>(parts, 2));
  }

  int add(int a, int b) { return binary(OpKind::Add, a, b); }
  int mul(int a, int b) { return binary(OpKind::Mul, a, b); }

  /// Scalar sum of all entries.
  int sum(int x) {
    Node n;
    n.op = OpKind::Sum;
    n.ins = {x};
    n.value = Tensor::zeros({1});
    double acc = 0.0;
    for (double v : at(x).value.data) acc += v;
    n.value.data[0] = acc;
    return push(std::move(n));
  }

  /// Offset removal: subtracts the global minimum (ties resolved to the first
  /// entry in memory order, which also receives the stat gradient).
  int subtract_min(int x) {
    const Tensor& xv = at(x).value;
    Node n;
    n.op = OpKind::SubtractMin;
    n.ins = {x};
    n.value = Tensor::zeros(xv.shape);
    std::size_t arg = 0;
    for (std::size_t t = 1; t < xv.numel(); ++t)
      if (xv.data[t] < xv.data[arg]) arg = t;
    const double m = xv.data[arg];
    for (std::size_t t = 0; t < xv.numel(); ++t) n.value.data[t] = xv.data[t] - m;
    n.argmin = arg;
    return push(std::move(n));
  }

  /// Offset removal for real acquisitions: subtracts the mean of the top-left
  /// window (clamped to the image if smaller). Single-channel inputs only.
  int subtract_corner_mean(int x, std::size_t win_h, std::size_t win_w) {
    const Tensor& xv = at(x).value;
    if (xv.shape.size() != 3 || xv.shape[0] != 1)
      throw std::invalid_argument("subtract_corner_mean: expected 1xHxW");
    if (win_h == 0 || win_w == 0)
      throw std::invalid_argument("subtract_corner_mean: empty window");
    Node n;
    n.op = OpKind::SubtractCornerMean;
    n.ins = {x};
    n.win_h = std::min(win_h, xv.shape[1]);
    n.win_w = std::min(win_w, xv.shape[2]);
    n.value = Tensor::zeros(xv.shape);
    const std::size_t W = xv.shape[2];
    double m = 0.0;
    for (std::size_t i = 0; i < n.win_h; ++i)
      for (std::size_t j = 0; j < n.win_w; ++j) m += xv.data[i * W + j];
    m /= static_cast<double>(n.win_h * n.win_w);
    for (std::size_t t = 0; t < xv.numel(); ++t) n.value.data[t] = xv.data[t] - m;
    return push(std::move(n));
  }

  /// Data term of the untrained-generator objective: for output y (1xHxW),
  /// sum_n w_n * sqrt(||[grad(y) - W(grad(psi))]_n||^2 + delta). The weights
  /// and the wrapped gradient target are captured as constants.
  int pudip_loss(int y, const Grid2D& psi, const Grid2D& w, double delta) {
    const Tensor& yv = at(y).value;
    if (yv.shape.size() != 3 || yv.shape[0] != 1)
      throw std::invalid_argument("pudip_loss: expected 1xHxW output");
    if (psi.height != yv.shape[1] || psi.width != yv.shape[2])
      throw std::invalid_argument("pudip_loss: psi shape mismatch");
    require_same_shape(psi, w, "pudip_loss");
    if (!(delta > 0.0)) throw std::invalid_argument("pudip_loss: delta must be positive");
    Node n;
    n.op = OpKind::PudipLoss;
    n.ins = {y};
    n.loss = std::make_shared<LossConsts>(LossConsts{w, wrapped_gradient(psi), delta});
    n.value = Tensor::zeros({1});
    const std::size_t H = psi.height, W = psi.width;
    const double* yd = yv.data.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        double rx = (j + 1 < W ? yd[i * W + j + 1] - yd[i * W + j] : 0.0) - n.loss->target.gx.at(i, j);
        double ry = (i + 1 < H ? yd[(i + 1) * W + j] - yd[i * W + j] : 0.0) - n.loss->target.gy.at(i, j);
        acc += w.at(i, j) * std::sqrt(rx * rx + ry * ry + delta);
      }
    }
    n.value.data[0] = acc;
    return push(std::move(n));
  }

  /// Reverse sweep from a scalar node. Gradients accumulate into every node
  /// on a path to a requires_grad leaf; read them back with grad_of(). Each
  /// graph supports exactly one backward pass.
  void backward(int loss_id) {
    if (backward_done_) throw std::logic_error("backward: already ran on this graph");
    backward_done_ = true;
    Node& ln = at(loss_id);
    if (ln.value.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    if (!ln.needs_grad) return;  // nothing trainable upstream
    ln.grad.assign(1, 1.0);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.needs_grad || n.grad.empty()) continue;
      dispatch_backward(n);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;

  Node& at(int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw std::out_of_range("Graph: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }
  const Node& at(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw std::out_of_range("Graph: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }

  int push(Node&& n) {
    if (n.op != OpKind::Leaf)
      for (int i : n.ins) n.needs_grad = n.needs_grad || at(i).needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(OpKind op, int a, int b) {
    const Tensor& av = at(a).value;
    const Tensor& bv = at(b).value;
    if (av.shape != bv.shape) throw std::invalid_argument("elementwise op: shape mismatch");
    Node n;
    n.op = op;
    n.ins = {a, b};
    n.value = Tensor::zeros(av.shape);
    if (op == OpKind::Add)
      for (std::size_t t = 0; t < av.numel(); ++t) n.value.data[t] = av.data[t] + bv.data[t];
    else
      for (std::size_t t = 0; t < av.numel(); ++t) n.value.data[t] = av.data[t] * bv.data[t];
    return push(std::move(n));
  }

  std::vector<double>* grad_buf(int id) {
    Node& n = at(id);
    if (!n.needs_grad) return nullptr;
    if (n.grad.size() != n.value.numel()) n.grad.assign(n.value.numel(), 0.0);
    return &n.grad;
  }

  void dispatch_backward(Node& n) {
    switch (n.op) {
      case OpKind::Leaf:
        return;
      case OpKind::Conv2d:
        backward_conv(n);
        return;
      case OpKind::BatchNorm:
        backward_bn(n);
        return;
      case OpKind::PRelu: {
        const Tensor& xv = at(n.ins[0]).value;
        const double a = at(n.ins[1]).value.data[0];
        if (auto* dx = grad_buf(n.ins[0]))
          for (std::size_t t = 0; t < xv.numel(); ++t)
            (*dx)[t] += n.grad[t] * (xv.data[t] > 0.0 ? 1.0 : a);
        if (auto* da = grad_buf(n.ins[1])) {
          double acc = 0.0;
          for (std::size_t t = 0; t < xv.numel(); ++t)
            if (!(xv.data[t] > 0.0)) acc += n.grad[t] * xv.data[t];
          (*da)[0] += acc;
        }
        return;
      }
      case OpKind::Upsample2x:
        backward_upsample(n);
        return;
      case OpKind::Concat: {
        std::size_t off = 0;
        for (int id : n.ins) {
          Node& src = at(id);
          std::size_t len = src.value.numel();
          if (auto* dx = grad_buf(id))
            for (std::size_t t = 0; t < len; ++t) (*dx)[t] += n.grad[off + t];
          off += len;
        }
        return;
      }
      case OpKind::Add: {
        for (int which = 0; which < 2; ++which)
          if (auto* dx = grad_buf(n.ins[static_cast<std::size_t>(which)]))
            for (std::size_t t = 0; t < n.grad.size(); ++t) (*dx)[t] += n.grad[t];
        return;
      }
      case OpKind::Mul: {
        const Tensor& av = at(n.ins[0]).value;
        const Tensor& bv = at(n.ins[1]).value;
        if (auto* da = grad_buf(n.ins[0]))
          for (std::size_t t = 0; t < n.grad.size(); ++t) (*da)[t] += n.grad[t] * bv.data[t];
        if (auto* db = grad_buf(n.ins[1]))
          for (std::size_t t = 0; t < n.grad.size(); ++t) (*db)[t] += n.grad[t] * av.data[t];
        return;
      }
      case OpKind::Sum: {
        if (auto* dx = grad_buf(n.ins[0])) {
          const double g = n.grad[0];
          for (double& v : *dx) v += g;
        }
        return;
      }
      case OpKind::SubtractMin: {
        if (auto* dx = grad_buf(n.ins[0])) {
          double gsum = 0.0;
          for (std::size_t t = 0; t < n.grad.size(); ++t) {
            (*dx)[t] += n.grad[t];
            gsum += n.grad[t];
          }
          (*dx)[n.argmin] -= gsum;
        }
        return;
      }
      case OpKind::SubtractCornerMean: {
        if (auto* dx = grad_buf(n.ins[0])) {
          double gsum = 0.0;
          for (std::size_t t = 0; t < n.grad.size(); ++t) {
            (*dx)[t] += n.grad[t];
            gsum += n.grad[t];
          }
          const std::size_t W = n.value.shape[2];
          const double share = gsum / static_cast<double>(n.win_h * n.win_w);
          for (std::size_t i = 0; i < n.win_h; ++i)
            for (std::size_t j = 0; j < n.win_w; ++j) (*dx)[i * W + j] -= share;
        }
        return;
      }
      case OpKind::PudipLoss:
        backward_pudip_loss(n);
        return;
    }
  }

  void backward_conv(Node& n) {
    const Tensor& xv = at(n.ins[0]).value;
    const Tensor& kv = at(n.ins[1]).value;
    const int C = static_cast<int>(xv.shape[0]);
    const int H = static_cast<int>(xv.shape[1]);
    const int W = static_cast<int>(xv.shape[2]);
    const int O = static_cast<int>(kv.shape[0]);
    const int Kh = static_cast<int>(kv.shape[2]);
    const int Kw = static_cast<int>(kv.shape[3]);
    const int Ho = static_cast<int>(n.value.shape[1]);
    const int Wo = static_cast<int>(n.value.shape[2]);
    if (auto* dx = grad_buf(n.ins[0]))
      detail::conv2d_backward_input(dx->data(), C, H, W, kv.data.data(), O, Kh, Kw, n.stride,
                                    n.pad, n.grad.data(), Ho, Wo);
    auto* dk = grad_buf(n.ins[1]);
    auto* db = grad_buf(n.ins[2]);
    if (dk || db) {
      // Parameter gradients always travel together in this network.
      std::vector<double> dk_local, db_local;
      double* dkp = dk ? dk->data() : (dk_local.assign(kv.numel(), 0.0), dk_local.data());
      double* dbp = db ? db->data() : (db_local.assign(static_cast<std::size_t>(O), 0.0), db_local.data());
      detail::conv2d_backward_params(dkp, dbp, xv.data.data(), C, H, W, kv.data.data(), O, Kh, Kw,
                                     n.stride, n.pad, n.grad.data(), Ho, Wo);
    }
  }

  void backward_bn(Node& n) {
    const Tensor& xv = at(n.ins[0]).value;
    const Tensor& gv = at(n.ins[1]).value;
    const std::size_t C = xv.shape[0];
    const std::size_t hw = xv.shape[1] * xv.shape[2];
    auto* dx = grad_buf(n.ins[0]);
    auto* dgamma = grad_buf(n.ins[1]);
    auto* dbeta = grad_buf(n.ins[2]);
    for (std::size_t c = 0; c < C; ++c) {
      const double* x = xv.data.data() + c * hw;
      const double* g = n.grad.data() + c * hw;
      const double m = n.mean[c];
      const double inv = n.inv_std[c];
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t t = 0; t < hw; ++t) {
        sum_g += g[t];
        sum_gx += g[t] * (x[t] - m) * inv;
      }
      if (dgamma) (*dgamma)[c] += sum_gx;
      if (dbeta) (*dbeta)[c] += sum_g;
      if (dx) {
        const double gamma = gv.data[c];
        const double nn = static_cast<double>(hw);
        double* d = dx->data() + c * hw;
        for (std::size_t t = 0; t < hw; ++t) {
          double xh = (x[t] - m) * inv;
          d[t] += gamma * inv / nn * (nn * g[t] - sum_g - xh * sum_gx);
        }
      }
    }
  }

  void backward_upsample(Node& n) {
    auto* dx = grad_buf(n.ins[0]);
    if (!dx) return;
    const Tensor& xv = at(n.ins[0]).value;
    const std::size_t C = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
    auto taps = [](std::size_t out, std::size_t src_dim, std::size_t& i0, std::size_t& i1,
                   double& f) {
      double s = (static_cast<double>(out) + 0.5) * 0.5 - 0.5;
      double fl = std::floor(s);
      f = s - fl;
      auto lo = static_cast<std::ptrdiff_t>(fl);
      auto hi = lo + 1;
      i0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(lo, 0, static_cast<std::ptrdiff_t>(src_dim) - 1));
      i1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(hi, 0, static_cast<std::ptrdiff_t>(src_dim) - 1));
    };
    for (std::size_t c = 0; c < C; ++c) {
      double* d = dx->data() + c * H * W;
      const double* g = n.grad.data() + c * 4 * H * W;
      for (std::size_t oy = 0; oy < 2 * H; ++oy) {
        std::size_t y0, y1;
        double fy;
        taps(oy, H, y0, y1, fy);
        for (std::size_t ox = 0; ox < 2 * W; ++ox) {
          std::size_t x0, x1;
          double fx;
          taps(ox, W, x0, x1, fx);
          const double gv = g[oy * 2 * W + ox];
          d[y0 * W + x0] += (1.0 - fy) * (1.0 - fx) * gv;
          d[y0 * W + x1] += (1.0 - fy) * fx * gv;
          d[y1 * W + x0] += fy * (1.0 - fx) * gv;
          d[y1 * W + x1] += fy * fx * gv;
        }
      }
    }
  }

  void backward_pudip_loss(Node& n) {
    auto* dy = grad_buf(n.ins[0]);
    if (!dy) return;
    const Tensor& yv = at(n.ins[0]).value;
    const std::size_t H = yv.shape[1], W = yv.shape[2];
    const double g = n.grad[0];
    const LossConsts& lc = *n.loss;
    // u = w * rx / sqrt(.), v = w * ry / sqrt(.); dy = Dx'u + Dy'v.
    Grid2D u(H, W, 0.0), v(H, W, 0.0);
    const double* yd = yv.data.data();
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        double rx = (j + 1 < W ? yd[i * W + j + 1] - yd[i * W + j] : 0.0) - lc.target.gx.at(i, j);
        double ry = (i + 1 < H ? yd[(i + 1) * W + j] - yd[i * W + j] : 0.0) - lc.target.gy.at(i, j);
        double s = lc.w.at(i, j) / std::sqrt(rx * rx + ry * ry + lc.delta);
        u.at(i, j) = s * rx;
        v.at(i, j) = s * ry;
      }
    }
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        double acc = (j >= 1 ? u.at(i, j - 1) : 0.0) - (j + 1 < W ? u.at(i, j) : 0.0);
        acc += (i >= 1 ? v.at(i - 1, j) : 0.0) - (i + 1 < H ? v.at(i, j) : 0.0);
        (*dy)[i * W + j] += g * acc;
      }
    }
  }
};

}  // namespace phz::nn
