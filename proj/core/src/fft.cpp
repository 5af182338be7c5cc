#include "ugseg/fft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "ugseg/errors.hpp"

namespace ugseg {
namespace {

bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place radix-2 Cooley-Tukey on interleaved strided complex data.
/// sign = -1 forward, +1 inverse (no normalization here).
void fft1d(double* re, double* im, std::int64_t n, std::int64_t stride, int sign) {
  // Bit-reversal permutation.
  for (std::int64_t i = 1, j = 0; i < n; ++i) {
    std::int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j |= bit;
    if (i < j) {
      std::swap(re[i * stride], re[j * stride]);
      std::swap(im[i * stride], im[j * stride]);
    }
  }
  for (std::int64_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::int64_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::int64_t k = 0; k < len / 2; ++k) {
        const std::int64_t a = (i + k) * stride;
        const std::int64_t b = (i + k + len / 2) * stride;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

void fft2d_plane(double* re, double* im, std::int64_t h, std::int64_t w, int sign) {
  for (std::int64_t y = 0; y < h; ++y) fft1d(re + y * w, im + y * w, w, 1, sign);
  for (std::int64_t x = 0; x < w; ++x) fft1d(re + x, im + x, h, w, sign);
}

void check_chw(const Shape& s, const char* what) {
  if (s.size() != 3) throw ShapeError(std::string(what) + ": expected CxHxW input");
  if (!is_pow2(s[1]) || !is_pow2(s[2])) {
    throw ValueError(std::string(what) + ": H and W must be powers of two, got " +
                     shape_str(s));
  }
}

}  // namespace

ComplexSpectrum fft2d(const Tensor<double>& x) {
  check_chw(x.shape, "fft2d");
  const std::int64_t c = x.shape[0], h = x.shape[1], w = x.shape[2];
  ComplexSpectrum s;
  s.re = x;
  s.im = Tensor<double>::zeros(x.shape);
  s.layout = SpectrumLayout::kDcCorner;
  for (std::int64_t ch = 0; ch < c; ++ch) {
    fft2d_plane(s.re.data.data() + ch * h * w, s.im.data.data() + ch * h * w, h, w, -1);
  }
  return s;
}

Tensor<double> ifft2d_real(const ComplexSpectrum& s, double residue_abort) {
  check_chw(s.re.shape, "ifft2d");
  require_same_shape(s.re, s.im, "ifft2d");
  ComplexSpectrum t = s.layout == SpectrumLayout::kDcCentered ? fftshift(s) : s;
  const std::int64_t c = t.re.shape[0], h = t.re.shape[1], w = t.re.shape[2];
  const double norm = 1.0 / static_cast<double>(h * w);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    fft2d_plane(t.re.data.data() + ch * h * w, t.im.data.data() + ch * h * w, h, w, +1);
  }
  double max_imag = 0.0;
  for (auto& v : t.im.data) max_imag = std::max(max_imag, std::abs(v * norm));
  if (max_imag > residue_abort) {
    throw NumericError("ifft2d: imaginary residue " + std::to_string(max_imag) +
                       " exceeds " + std::to_string(residue_abort) +
                       " (spectrum is not conjugate-symmetric)");
  }
  Tensor<double> out = std::move(t.re);
  for (auto& v : out.data) v *= norm;
  return out;
}

ComplexSpectrum fftshift(const ComplexSpectrum& s) {
  check_chw(s.re.shape, "fftshift");
  const std::int64_t c = s.re.shape[0], h = s.re.shape[1], w = s.re.shape[2];
  ComplexSpectrum out;
  out.re = Tensor<double>::zeros(s.re.shape);
  out.im = Tensor<double>::zeros(s.im.shape);
  out.layout = s.layout == SpectrumLayout::kDcCorner ? SpectrumLayout::kDcCentered
                                                     : SpectrumLayout::kDcCorner;
  const std::int64_t h2 = h / 2, w2 = w / 2;
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const std::int64_t base = ch * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      const std::int64_t ys = (y + h2) % h;
      for (std::int64_t x = 0; x < w; ++x) {
        const std::int64_t xs = (x + w2) % w;
        out.re.data[base + ys * w + xs] = s.re.data[base + y * w + x];
        out.im.data[base + ys * w + xs] = s.im.data[base + y * w + x];
      }
    }
  }
  return out;
}

std::pair<Tensor<double>, Tensor<double>> decompose(const ComplexSpectrum& s) {
  require_same_shape(s.re, s.im, "decompose");
  Tensor<double> amp = Tensor<double>::zeros(s.re.shape);
  Tensor<double> phase = Tensor<double>::zeros(s.re.shape);
  for (std::int64_t i = 0; i < amp.numel(); ++i) {
    const double re = s.re[i], im = s.im[i];
    amp[i] = std::hypot(re, im);
    phase[i] = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
  }
  return {std::move(amp), std::move(phase)};
}

ComplexSpectrum recompose(const Tensor<double>& amplitude, const Tensor<double>& phase,
                          SpectrumLayout layout) {
  require_same_shape(amplitude, phase, "recompose");
  ComplexSpectrum s;
  s.re = Tensor<double>::zeros(amplitude.shape);
  s.im = Tensor<double>::zeros(amplitude.shape);
  s.layout = layout;
  for (std::int64_t i = 0; i < amplitude.numel(); ++i) {
    s.re[i] = amplitude[i] * std::cos(phase[i]);
    s.im[i] = amplitude[i] * std::sin(phase[i]);
  }
  return s;
}

}  // namespace ugseg
