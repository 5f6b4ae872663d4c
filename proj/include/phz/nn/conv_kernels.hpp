#pragma once

#include <algorithm>
#include <cstddef>

// Direct convolution kernels (cross-correlation convention). The block-of-4
// output-channel structure gives the compiler independent accumulator streams
// it can vectorize without reassociating any single sum, so results stay
// bit-deterministic at any optimization level.

namespace phz::nn::detail {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

template <int OB>
inline void conv_fwd_block(const double* x, int C, int H, int W, const double* k, int o0, int O,
                           int Kh, int Kw, const double* bias, int stride, int pad, double* y,
                           int Ho, int Wo) {
  double* yp[OB];
  for (int i = 0; i < OB; ++i) {
    yp[i] = y + static_cast<std::size_t>(o0 + i) * Ho * Wo;
    std::fill(yp[i], yp[i] + static_cast<std::size_t>(Ho) * Wo, bias[o0 + i]);
  }
  for (int c = 0; c < C; ++c) {
    const double* xc = x + static_cast<std::size_t>(c) * H * W;
    for (int ky = 0; ky < Kh; ++ky) {
      for (int kx = 0; kx < Kw; ++kx) {
        double kk[OB];
        for (int i = 0; i < OB; ++i)
          kk[i] = k[((static_cast<std::size_t>(o0 + i) * C + c) * Kh + ky) * Kw + kx];
        int oy_lo = ky >= pad ? 0 : (pad - ky + stride - 1) / stride;
        int oy_hi = H - 1 - ky + pad < 0 ? -1 : std::min(Ho - 1, (H - 1 - ky + pad) / stride);
        int ox_lo = kx >= pad ? 0 : (pad - kx + stride - 1) / stride;
        int ox_hi = W - 1 - kx + pad < 0 ? -1 : std::min(Wo - 1, (W - 1 - kx + pad) / stride);
        for (int oy = oy_lo; oy <= oy_hi; ++oy) {
          const double* xrow = xc + static_cast<std::size_t>(oy * stride + ky - pad) * W;
          if (stride == 1) {
            const double* xr = xrow + (ox_lo + kx - pad);
            const int len = ox_hi - ox_lo + 1;
            for (int i = 0; i < OB; ++i) {
              double* yr = yp[i] + static_cast<std::size_t>(oy) * Wo + ox_lo;
              const double kv = kk[i];
              for (int t = 0; t < len; ++t) yr[t] += kv * xr[t];
            }
          } else {
            for (int i = 0; i < OB; ++i) {
              double* yr = yp[i] + static_cast<std::size_t>(oy) * Wo;
              const double kv = kk[i];
              for (int ox = ox_lo; ox <= ox_hi; ++ox)
                yr[ox] += kv * xrow[ox * stride + kx - pad];
            }
          }
        }
      }
    }
  }
}

inline void conv2d_forward(const double* x, int C, int H, int W, const double* k, int O, int Kh,
                           int Kw, const double* bias, int stride, int pad, double* y, int Ho,
                           int Wo) {
  int o0 = 0;
  for (; o0 + 4 <= O; o0 += 4) conv_fwd_block<4>(x, C, H, W, k, o0, O, Kh, Kw, bias, stride, pad, y, Ho, Wo);
  switch (O - o0) {
    case 1: conv_fwd_block<1>(x, C, H, W, k, o0, O, Kh, Kw, bias, stride, pad, y, Ho, Wo); break;
    case 2: conv_fwd_block<2>(x, C, H, W, k, o0, O, Kh, Kw, bias, stride, pad, y, Ho, Wo); break;
    case 3: conv_fwd_block<3>(x, C, H, W, k, o0, O, Kh, Kw, bias, stride, pad, y, Ho, Wo); break;
    default: break;
  }
}

// Gradient w.r.t. the input: scatter of gy through the kernel, accumulated
// per input channel with a block of 4 output channels feeding one stream.
template <int OB>
inline void conv_bwd_input_block(double* dx, int C, int H, int W, const double* k, int o0, int O,
                                 int Kh, int Kw, int stride, int pad, const double* gy, int Ho,
                                 int Wo) {
  const double* gp[OB];
  for (int i = 0; i < OB; ++i) gp[i] = gy + static_cast<std::size_t>(o0 + i) * Ho * Wo;
  for (int c = 0; c < C; ++c) {
    double* dxc = dx + static_cast<std::size_t>(c) * H * W;
    for (int ky = 0; ky < Kh; ++ky) {
      for (int kx = 0; kx < Kw; ++kx) {
        double kk[OB];
        for (int i = 0; i < OB; ++i)
          kk[i] = k[((static_cast<std::size_t>(o0 + i) * C + c) * Kh + ky) * Kw + kx];
        int oy_lo = ky >= pad ? 0 : (pad - ky + stride - 1) / stride;
        int oy_hi = H - 1 - ky + pad < 0 ? -1 : std::min(Ho - 1, (H - 1 - ky + pad) / stride);
        int ox_lo = kx >= pad ? 0 : (pad - kx + stride - 1) / stride;
        int ox_hi = W - 1 - kx + pad < 0 ? -1 : std::min(Wo - 1, (W - 1 - kx + pad) / stride);
        for (int oy = oy_lo; oy <= oy_hi; ++oy) {
          double* dxrow = dxc + static_cast<std::size_t>(oy * stride + ky - pad) * W;
          if (stride == 1) {
            double* dxr = dxrow + (ox_lo + kx - pad);
            const int len = ox_hi - ox_lo + 1;
            const double* g0 = gp[0] + static_cast<std::size_t>(oy) * Wo + ox_lo;
            if constexpr (OB == 4) {
              const double* g1 = gp[1] + static_cast<std::size_t>(oy) * Wo + ox_lo;
              const double* g2 = gp[2] + static_cast<std::size_t>(oy) * Wo + ox_lo;
              const double* g3 = gp[3] + static_cast<std::size_t>(oy) * Wo + ox_lo;
              for (int t = 0; t < len; ++t)
                dxr[t] += kk[0] * g0[t] + kk[1] * g1[t] + kk[2] * g2[t] + kk[3] * g3[t];
            } else {
              for (int i = 0; i < OB; ++i) {
                const double* gi = gp[i] + static_cast<std::size_t>(oy) * Wo + ox_lo;
                const double kv = kk[i];
                for (int t = 0; t < len; ++t) dxr[t] += kv * gi[t];
              }
            }
          } else {
            for (int i = 0; i < OB; ++i) {
              const double* gi = gp[i] + static_cast<std::size_t>(oy) * Wo;
              const double kv = kk[i];
              for (int ox = ox_lo; ox <= ox_hi; ++ox)
                dxrow[ox * stride + kx - pad] += kv * gi[ox];
            }
          }
        }
      }
    }
  }
}

inline void conv2d_backward_input(double* dx, int C, int H, int W, const double* k, int O, int Kh,
                                  int Kw, int stride, int pad, const double* gy, int Ho, int Wo) {
  int o0 = 0;
  for (; o0 + 4 <= O; o0 += 4)
    conv_bwd_input_block<4>(dx, C, H, W, k, o0, O, Kh, Kw, stride, pad, gy, Ho, Wo);
  switch (O - o0) {
    case 1: conv_bwd_input_block<1>(dx, C, H, W, k, o0, O, Kh, Kw, stride, pad, gy, Ho, Wo); break;
    case 2: conv_bwd_input_block<2>(dx, C, H, W, k, o0, O, Kh, Kw, stride, pad, gy, Ho, Wo); break;
    case 3: conv_bwd_input_block<3>(dx, C, H, W, k, o0, O, Kh, Kw, stride, pad, gy, Ho, Wo); break;
    default: break;
  }
}

// Gradient w.r.t. kernel and bias. Each (o,c,ky,kx) entry is a dot product
// over the valid output window; four manual lanes keep it vectorizable with a
// fixed combine order.
inline void conv2d_backward_params(double* dk, double* db, const double* x, int C, int H, int W,
                                   const double* k_unused, int O, int Kh, int Kw, int stride,
                                   int pad, const double* gy, int Ho, int Wo) {
  (void)k_unused;
  for (int o = 0; o < O; ++o) {
    const double* go = gy + static_cast<std::size_t>(o) * Ho * Wo;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
    const std::size_t total = static_cast<std::size_t>(Ho) * Wo;
    std::size_t t = 0;
    for (; t + 4 <= total; t += 4) {
      b0 += go[t];
      b1 += go[t + 1];
      b2 += go[t + 2];
      b3 += go[t + 3];
    }
    for (; t < total; ++t) b0 += go[t];
    db[o] += (b0 + b1) + (b2 + b3);
    for (int c = 0; c < C; ++c) {
      const double* xc = x + static_cast<std::size_t>(c) * H * W;
      for (int ky = 0; ky < Kh; ++ky) {
        for (int kx = 0; kx < Kw; ++kx) {
          int oy_lo = ky >= pad ? 0 : (pad - ky + stride - 1) / stride;
          int oy_hi = H - 1 - ky + pad < 0 ? -1 : std::min(Ho - 1, (H - 1 - ky + pad) / stride);
          int ox_lo = kx >= pad ? 0 : (pad - kx + stride - 1) / stride;
          int ox_hi = W - 1 - kx + pad < 0 ? -1 : std::min(Wo - 1, (W - 1 - kx + pad) / stride);
          double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
          for (int oy = oy_lo; oy <= oy_hi; ++oy) {
            const double* grow = go + static_cast<std::size_t>(oy) * Wo;
            const double* xrow = xc + static_cast<std::size_t>(oy * stride + ky - pad) * W;
            if (stride == 1) {
              const double* xr = xrow + (ox_lo + kx - pad);
              const double* gr = grow + ox_lo;
              const int len = ox_hi - ox_lo + 1;
              int s = 0;
              for (; s + 4 <= len; s += 4) {
                a0 += gr[s] * xr[s];
                a1 += gr[s + 1] * xr[s + 1];
                a2 += gr[s + 2] * xr[s + 2];
                a3 += gr[s + 3] * xr[s + 3];
              }
              for (; s < len; ++s) a0 += gr[s] * xr[s];
            } else {
              for (int ox = ox_lo; ox <= ox_hi; ++ox)
                a0 += grow[ox] * xrow[ox * stride + kx - pad];
            }
          }
          dk[((static_cast<std::size_t>(o) * C + c) * Kh + ky) * Kw + kx] += (a0 + a1) + (a2 + a3);
        }
      }
    }
  }
}

}  // namespace phz::nn::detail
