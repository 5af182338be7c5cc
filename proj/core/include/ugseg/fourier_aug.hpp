#pragma once

#include "ugseg/fft.hpp"
#include "ugseg/rng.hpp"
#include "ugseg/tensor.hpp"

namespace ugseg {

/// Binary low-frequency window for amplitude mixing: 1 exactly on the
/// centered block of height 2*floor(alpha*H) and width 2*floor(alpha*W)
/// (dc-centered layout), 0 elsewhere.
struct MixMask {
  Tensor<double> plane;  // [H,W], values in {0,1}
  double alpha = 0.1;

  static MixMask make(std::int64_t h, std::int64_t w, double alpha);
};

/// (lambda*a_other + (1-lambda)*a_self) under the mask, a_self outside.
/// Amplitudes must be dc-centered [C,H,W]; the mask is shared by channels.
Tensor<double> mix_amplitudes(const Tensor<double>& a_self, const Tensor<double>& a_other,
                              double lambda, const MixMask& mask);

/// Builds amplitude*e^{j*phase} in the given layout, inverse-transforms,
/// discards the (checked) imaginary residue, and clamps to [-1, 1].
Tensor<double> recompose_to_image(const Tensor<double>& amplitude,
                                  const Tensor<double>& phase, SpectrumLayout layout);

template <typename T>
Tensor<T> recompose_to_image_as(const Tensor<double>& amplitude,
                                const Tensor<double>& phase, SpectrumLayout layout) {
  return recompose_to_image(amplitude, phase, layout).cast<T>();
}

/// End-to-end Fourier style augmentation: draws lambda ~ Beta(alpha, alpha),
/// mixes the low-frequency amplitudes of x with x_other under MixMask(alpha),
/// and reconstructs with x's phase untouched. Inputs are [C,H,W] in [-1,1].
Tensor<double> augment(const Tensor<double>& x, const Tensor<double>& x_other, Rng& rng,
                       double alpha);

template <typename T>
Tensor<T> augment(const Tensor<T>& x, const Tensor<T>& x_other, Rng& rng, double alpha) {
  return augment(x.template cast<double>(), x_other.template cast<double>(), rng, alpha)
      .template cast<T>();
}

}  // namespace ugseg
