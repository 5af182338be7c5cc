#include "ugseg/fourier_aug.hpp"

#include <algorithm>
#include <cmath>

#include "ugseg/counters.hpp"
#include "ugseg/errors.hpp"

namespace ugseg {

MixMask MixMask::make(std::int64_t h, std::int64_t w, double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) {
    throw ValueError("MixMask: alpha must be in (0, 0.5]");
  }
  if (h <= 0 || w <= 0) throw ShapeError("MixMask: extents must be positive");
  MixMask m;
  m.alpha = alpha;
  m.plane = Tensor<double>::zeros({h, w});
  const std::int64_t hh = static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(h)));
  const std::int64_t hw = static_cast<std::int64_t>(std::floor(alpha * static_cast<double>(w)));
  const std::int64_t cy = h / 2, cx = w / 2;
  for (std::int64_t y = cy - hh; y < cy + hh; ++y) {
    for (std::int64_t x = cx - hw; x < cx + hw; ++x) {
      m.plane[y * w + x] = 1.0;
    }
  }
  return m;
}

Tensor<double> mix_amplitudes(const Tensor<double>& a_self, const Tensor<double>& a_other,
                              double lambda, const MixMask& mask) {
  require_same_shape(a_self, a_other, "mix_amplitudes");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValueError("mix_amplitudes: lambda must be in [0,1]");
  }
  if (a_self.rank() != 3) throw ShapeError("mix_amplitudes: amplitudes must be CxHxW");
  const std::int64_t c = a_self.shape[0], h = a_self.shape[1], w = a_self.shape[2];
  if (mask.plane.shape != Shape{h, w}) {
    throw ShapeError("mix_amplitudes: mask shape does not match amplitudes");
  }
  Tensor<double> out = a_self;
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const std::int64_t base = ch * h * w;
    for (std::int64_t i = 0; i < h * w; ++i) {
      if (mask.plane[i] != 0.0) {
        out[base + i] = lambda * a_other[base + i] + (1.0 - lambda) * a_self[base + i];
      }
    }
  }
  return out;
}

Tensor<double> recompose_to_image(const Tensor<double>& amplitude,
                                  const Tensor<double>& phase, SpectrumLayout layout) {
  Tensor<double> img = ifft2d_real(recompose(amplitude, phase, layout));
  for (auto& v : img.data) v = std::clamp(v, -1.0, 1.0);
  return img;
}

Tensor<double> augment(const Tensor<double>& x, const Tensor<double>& x_other, Rng& rng,
                       double alpha) {
  require_same_shape(x, x_other, "augment");
  if (x.rank() != 3) throw ShapeError("augment: inputs must be CxHxW");
  ++counters().augment;
  const double lambda = rng.beta(alpha, alpha);
  const MixMask mask = MixMask::make(x.shape[1], x.shape[2], alpha);
  auto [a_self, p_self] = decompose(fftshift(fft2d(x)));
  auto [a_other, p_other] = decompose(fftshift(fft2d(x_other)));
  const Tensor<double> mixed = mix_amplitudes(a_self, a_other, lambda, mask);
  return recompose_to_image(mixed, p_self, SpectrumLayout::kDcCentered);
}

}  // namespace ugseg
