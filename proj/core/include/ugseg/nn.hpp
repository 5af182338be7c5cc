#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ugseg/autodiff.hpp"
#include "ugseg/gemm.hpp"
#include "ugseg/parallel.hpp"
#include "ugseg/rng.hpp"

namespace ugseg {

inline constexpr double kProbEps = 1e-7;  // probability clamp before any log

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out = a->value;
  for (auto& v : out.data) v = v > T(0) ? v : T(0);
  return detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (a->value.data[i] > T(0)) a->grad[i] += self.grad[i];
    }
  });
}

/// Numerically stable sigmoid clamped to [1e-7, 1 - 1e-7] so that any
/// following log stays finite.
template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  const T lo = static_cast<T>(kProbEps);
  const T hi = T(1) - static_cast<T>(kProbEps);
  Tensor<T> out = a->value;
  for (auto& v : out.data) {
    T p;
    if (v >= T(0)) {
      p = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      p = e / (T(1) + e);
    }
    v = std::min(hi, std::max(lo, p));
  }
  return detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T p = self.value.data[i];
      a->grad[i] += self.grad[i] * p * (T(1) - p);
    }
  });
}

/// Inverted dropout: zero with probability rate, scale survivors by
/// 1/(1-rate). Identity when disabled or rate == 0.
template <typename T>
Var<T> dropout(const Var<T>& a, double rate, Rng& rng, bool enabled) {
  if (rate >= 1.0 || rate < 0.0) throw ValueError("dropout: rate must be in [0,1)");
  if (!enabled || rate == 0.0) return a;
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(a->value.data.size());
  Tensor<T> out = a->value;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() >= rate ? scale : T(0);
    out.data[i] *= mask[i];
  }
  return detail::make_op<T>(std::move(out), {a},
                            [a, mask = std::move(mask)](Node<T>& self) {
                              if (!a->requires_grad) return;
                              a->ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                a->grad[i] += self.grad[i] * mask[i];
                              }
                            });
}

/// x + eps with eps ~ N(0, sigma^2) elementwise; plain data transform with
/// no gradient path (used for stochastic teacher inputs).
template <typename T>
Tensor<T> add_gaussian_noise(const Tensor<T>& x, double sigma, Rng& rng) {
  Tensor<T> out = x;
  if (sigma == 0.0) return out;
  for (auto& v : out.data) v += static_cast<T>(rng.gaussian(0.0, sigma));
  return out;
}

namespace detail {

/// Unrolls one image into a column block of the batched patch matrix.
/// Row r of the [ch*k*k, row_stride] matrix holds patch element r; this
/// image's columns start at `cols` (offset into the row), `row_stride`
/// apart.
template <typename T>
void im2col(const T* img, std::int64_t ch, std::int64_t h, std::int64_t w,
            std::int64_t k, std::int64_t pad, T* cols, std::int64_t row_stride) {
  const std::int64_t hw = h * w;
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx, ++row) {
        T* dst = cols + row * row_stride;
        const std::int64_t dy = ky - pad;
        const std::int64_t dx = kx - pad;
        for (std::int64_t y = 0; y < h; ++y) {
          const std::int64_t sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(dst + y * w, dst + (y + 1) * w, T(0));
            continue;
          }
          const T* src = img + c * hw + sy * w;
          for (std::int64_t x = 0; x < w; ++x) {
            const std::int64_t sx = x + dx;
            dst[y * w + x] = (sx >= 0 && sx < w) ? src[sx] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, std::int64_t ch, std::int64_t h, std::int64_t w,
                std::int64_t k, std::int64_t pad, T* img, std::int64_t row_stride) {
  const std::int64_t hw = h * w;
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < ch; ++c) {
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx, ++row) {
        const T* src = cols + row * row_stride;
        const std::int64_t dy = ky - pad;
        const std::int64_t dx = kx - pad;
        for (std::int64_t y = 0; y < h; ++y) {
          const std::int64_t sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          T* dst = img + c * hw + sy * w;
          for (std::int64_t x = 0; x < w; ++x) {
            const std::int64_t sx = x + dx;
            if (sx >= 0 && sx < w) dst[sx] += src[y * w + x];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Same-padding 2D cross-correlation. kernel is OutC x InC x k x k with k
/// odd and padding fixed to (k-1)/2, so spatial extents are preserved.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernel, const Var<T>& bias,
              std::int64_t padding) {
  const Tensor<T>& x = input->value;
  const Tensor<T>& kw = kernel->value;
  if (x.rank() != 4) throw ShapeError("conv2d: input must be NxCxHxW");
  if (kw.rank() != 4 || kw.shape[2] != kw.shape[3]) {
    throw ShapeError("conv2d: kernel must be OxIxkxk");
  }
  const std::int64_t n = x.shape[0], cin = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t cout = kw.shape[0], k = kw.shape[2];
  if (kw.shape[1] != cin) {
    throw ShapeError("conv2d: kernel input channels " + std::to_string(kw.shape[1]) +
                     " do not match input channels " + std::to_string(cin));
  }
  if (k % 2 == 0) throw ValueError("conv2d: kernel size must be odd");
  if (padding != (k - 1) / 2) throw ValueError("conv2d: padding must be (k-1)/2");
  if (bias->value.shape != Shape{cout}) throw ShapeError("conv2d: bias must be [OutC]");

  const std::int64_t hw = h * w;
  const std::int64_t ckk = cin * k * k;
  const std::int64_t nhw = n * hw;
  Tensor<T> out = Tensor<T>::zeros({n, cout, h, w});

  // Batched im2col: one [cout x ckk] * [ckk x n*hw] product per layer call
  // keeps the GEMM large enough to vectorize well.
  {
    std::vector<T> cols(static_cast<std::size_t>(ckk * nhw));
    parallel_for(n, [&](std::int64_t i) {
      detail::im2col(x.data.data() + i * cin * hw, cin, h, w, k, padding,
                     cols.data() + i * hw, nhw);
    });
    std::vector<T> prod(static_cast<std::size_t>(cout * nhw));
    detail::gemm_nn(cout, nhw, ckk, kw.data.data(), cols.data(), prod.data(), false);
    parallel_for(n, [&](std::int64_t i) {
      for (std::int64_t oc = 0; oc < cout; ++oc) {
        const T b = bias->value[oc];
        const T* src = prod.data() + oc * nhw + i * hw;
        T* dst = out.data.data() + (i * cout + oc) * hw;
        for (std::int64_t j = 0; j < hw; ++j) dst[j] = src[j] + b;
      }
    });
  }

  auto bp = [input, kernel, bias, n, cin, cout, h, w, k, padding](Node<T>& self) {
    const std::int64_t hw = h * w;
    const std::int64_t ckk = cin * k * k;
    const std::int64_t nhw = n * hw;
    const T* gout = self.grad.data();
    if (bias->requires_grad) {
      bias->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t oc = 0; oc < cout; ++oc) {
          const T* row = gout + (i * cout + oc) * hw;
          T s = T(0);
          for (std::int64_t j = 0; j < hw; ++j) s += row[j];
          bias->grad[static_cast<std::size_t>(oc)] += s;
        }
      }
    }
    if (!kernel->requires_grad && !input->requires_grad) return;
    // Output gradient rearranged to [cout, n*hw] once for both products.
    std::vector<T> gperm(static_cast<std::size_t>(cout * nhw));
    parallel_for(n, [&](std::int64_t i) {
      for (std::int64_t oc = 0; oc < cout; ++oc) {
        const T* src = gout + (i * cout + oc) * hw;
        T* dst = gperm.data() + oc * nhw + i * hw;
        for (std::int64_t j = 0; j < hw; ++j) dst[j] = src[j];
      }
    });
    if (kernel->requires_grad) {
      kernel->ensure_grad();
      std::vector<T> cols(static_cast<std::size_t>(ckk * nhw));
      parallel_for(n, [&](std::int64_t i) {
        detail::im2col(input->value.data.data() + i * cin * hw, cin, h, w, k,
                       padding, cols.data() + i * hw, nhw);
      });
      detail::gemm_nt(cout, ckk, nhw, gperm.data(), cols.data(),
                      kernel->grad.data(), true);
    }
    if (input->requires_grad) {
      input->ensure_grad();
      std::vector<T> colsg(static_cast<std::size_t>(ckk * nhw));
      detail::gemm_tn(ckk, nhw, cout, kernel->value.data.data(), gperm.data(),
                      colsg.data(), false);
      parallel_for(n, [&](std::int64_t i) {
        detail::col2im_add(colsg.data() + i * hw, cin, h, w, k, padding,
                           input->grad.data() + i * cin * hw, nhw);
      });
    }
  };
  return detail::make_op<T>(std::move(out), {input, kernel, bias}, std::move(bp));
}

/// Factor-2 max pooling; backward routes the gradient to the argmax
/// position, first occurrence in row-major order on ties.
template <typename T>
Var<T> maxpool2(const Var<T>& input) {
  const Tensor<T>& x = input->value;
  if (x.rank() != 4) throw ShapeError("maxpool2: input must be NxCxHxW");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  if (h % 2 != 0 || w % 2 != 0) throw ShapeError("maxpool2: H and W must be even");
  const std::int64_t ho = h / 2, wo = w / 2;
  Tensor<T> out = Tensor<T>::zeros({n, c, ho, wo});
  std::vector<std::int64_t> argmax(out.data.size());
  for (std::int64_t nc = 0; nc < n * c; ++nc) {
    const T* src = x.data.data() + nc * h * w;
    T* dst = out.data.data() + nc * ho * wo;
    std::int64_t* arg = argmax.data() + nc * ho * wo;
    for (std::int64_t y = 0; y < ho; ++y) {
      for (std::int64_t xo = 0; xo < wo; ++xo) {
        std::int64_t best = (2 * y) * w + 2 * xo;
        T bv = src[best];
        for (std::int64_t dy = 0; dy < 2; ++dy) {
          for (std::int64_t dx = 0; dx < 2; ++dx) {
            const std::int64_t idx = (2 * y + dy) * w + (2 * xo + dx);
            if (src[idx] > bv) {
              bv = src[idx];
              best = idx;
            }
          }
        }
        dst[y * wo + xo] = bv;
        arg[y * wo + xo] = nc * h * w + best;
      }
    }
  }
  return detail::make_op<T>(
      std::move(out), {input}, [input, argmax = std::move(argmax)](Node<T>& self) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          input->grad[static_cast<std::size_t>(argmax[i])] += self.grad[i];
        }
      });
}

/// Factor-2 nearest-neighbor upsampling.
template <typename T>
Var<T> upsample2_nearest(const Var<T>& input) {
  const Tensor<T>& x = input->value;
  if (x.rank() != 4) throw ShapeError("upsample2_nearest: input must be NxCxHxW");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t ho = h * 2, wo = w * 2;
  Tensor<T> out = Tensor<T>::zeros({n, c, ho, wo});
  for (std::int64_t nc = 0; nc < n * c; ++nc) {
    const T* src = x.data.data() + nc * h * w;
    T* dst = out.data.data() + nc * ho * wo;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t xx = 0; xx < w; ++xx) {
        const T v = src[y * w + xx];
        dst[(2 * y) * wo + 2 * xx] = v;
        dst[(2 * y) * wo + 2 * xx + 1] = v;
        dst[(2 * y + 1) * wo + 2 * xx] = v;
        dst[(2 * y + 1) * wo + 2 * xx + 1] = v;
      }
    }
  }
  return detail::make_op<T>(std::move(out), {input}, [input, h, w](Node<T>& self) {
    if (!input->requires_grad) return;
    input->ensure_grad();
    const std::int64_t ho = h * 2, wo = w * 2;
    const std::int64_t nc_total = self.value.shape[0] * self.value.shape[1];
    for (std::int64_t nc = 0; nc < nc_total; ++nc) {
      const T* g = self.grad.data() + nc * ho * wo;
      T* dst = input->grad.data() + nc * h * w;
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t xx = 0; xx < w; ++xx) {
          dst[y * w + xx] += g[(2 * y) * wo + 2 * xx] + g[(2 * y) * wo + 2 * xx + 1] +
                             g[(2 * y + 1) * wo + 2 * xx] +
                             g[(2 * y + 1) * wo + 2 * xx + 1];
        }
      }
    }
  });
}

/// Concatenation along the channel axis (UNet skip connections).
template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Tensor<T>& xa = a->value;
  const Tensor<T>& xb = b->value;
  if (xa.rank() != 4 || xb.rank() != 4) {
    throw ShapeError("concat_channels: inputs must be NxCxHxW");
  }
  if (xa.shape[0] != xb.shape[0] || xa.shape[2] != xb.shape[2] ||
      xa.shape[3] != xb.shape[3]) {
    throw ShapeError("concat_channels: non-channel extents must match");
  }
  const std::int64_t n = xa.shape[0], ca = xa.shape[1], cb = xb.shape[1];
  const std::int64_t hw = xa.shape[2] * xa.shape[3];
  Tensor<T> out = Tensor<T>::zeros({n, ca + cb, xa.shape[2], xa.shape[3]});
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(xa.data.data() + i * ca * hw, ca * hw,
                out.data.data() + i * (ca + cb) * hw);
    std::copy_n(xb.data.data() + i * cb * hw, cb * hw,
                out.data.data() + i * (ca + cb) * hw + ca * hw);
  }
  return detail::make_op<T>(std::move(out), {a, b}, [a, b, n, ca, cb, hw](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const T* g = self.grad.data() + i * (ca + cb) * hw;
        T* dst = a->grad.data() + i * ca * hw;
        for (std::int64_t j = 0; j < ca * hw; ++j) dst[j] += g[j];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        const T* g = self.grad.data() + i * (ca + cb) * hw + ca * hw;
        T* dst = b->grad.data() + i * cb * hw;
        for (std::int64_t j = 0; j < cb * hw; ++j) dst[j] += g[j];
      }
    }
  });
}

}  // namespace ugseg
