#pragma once

#include <utility>

#include "ugseg/tensor.hpp"

namespace ugseg {

/// Where the zero-frequency bin sits in the spectrum planes.
enum class SpectrumLayout { kDcCorner, kDcCentered };

/// Per-channel complex 2D spectrum of a CxHxW image, stored as separate
/// real/imaginary planes (double precision regardless of image precision).
struct ComplexSpectrum {
  Tensor<double> re;  // [C,H,W]
  Tensor<double> im;  // [C,H,W]
  SpectrumLayout layout = SpectrumLayout::kDcCorner;

  std::int64_t channels() const { return re.shape[0]; }
  std::int64_t height() const { return re.shape[1]; }
  std::int64_t width() const { return re.shape[2]; }
};

/// Unnormalized forward DFT per channel: X[k] = sum_n x[n] e^{-2*pi*i*k*n/N}.
/// Input must be [C,H,W] with H, W powers of two. Result is dc-corner.
ComplexSpectrum fft2d(const Tensor<double>& x);

template <typename T>
ComplexSpectrum fft2d(const Tensor<T>& x) {
  return fft2d(x.template cast<double>());
}

/// Inverse transform (1/(HW) normalized). Returns the real plane; the
/// imaginary residue is checked against `residue_abort` (NumericError above
/// it) and otherwise discarded. Accepts either layout.
Tensor<double> ifft2d_real(const ComplexSpectrum& s, double residue_abort = 1e-2);

/// Swaps quadrants so the DC bin moves corner<->center; toggles the layout
/// flag. Exact involution for the even (power-of-two) extents used here.
ComplexSpectrum fftshift(const ComplexSpectrum& s);

/// amplitude = |z|, phase = atan2(im, re) in (-pi, pi] with phase(0) = 0.
std::pair<Tensor<double>, Tensor<double>> decompose(const ComplexSpectrum& s);

/// Inverse of decompose: re = a*cos(phi), im = a*sin(phi).
ComplexSpectrum recompose(const Tensor<double>& amplitude, const Tensor<double>& phase,
                          SpectrumLayout layout);

}  // namespace ugseg
