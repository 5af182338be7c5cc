#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "ugseg/pgm.hpp"
#include "ugseg/segnet.hpp"

namespace ugseg {

/// Per-pixel predictive entropy from T stochastic teacher passes; values
/// live in [0, ln 2] (binary entropy in nats).
template <typename T>
struct UncertaintyMap {
  Tensor<T> values;  // [N,1,H,W]
  std::int64_t passes = 8;
  double sigma = 0.1;
};

/// Runs `passes` stochastic forwards of the teacher on x_hat (input noise
/// sigma + dropout), averages the predictions in fixed pass order, and
/// returns (mean prediction, entropy map). Nothing here tracks gradients:
/// the uncertainty is a constant weight downstream.
template <typename T>
std::pair<Tensor<T>, UncertaintyMap<T>> estimate_uncertainty(
    const SegNetwork<T>& teacher, const Tensor<T>& x_hat, std::int64_t passes,
    double sigma, Rng& rng) {
  if (passes < 1) throw ValueError("estimate_uncertainty: passes must be >= 1");
  if (sigma < 0.0) throw ValueError("estimate_uncertainty: sigma must be >= 0");
  ++counters().uncertainty_estimate;
  NoGradGuard no_grad;
  Tensor<T> sum;
  for (std::int64_t k = 0; k < passes; ++k) {
    Rng pass_rng = rng.fork(static_cast<std::uint64_t>(k));
    ++counters().teacher_forward;
    Tensor<T> p = teacher.forward(x_hat, /*stochastic=*/true, sigma, pass_rng)->value;
    if (k == 0) {
      sum = std::move(p);
    } else {
      for (std::int64_t i = 0; i < sum.numel(); ++i) sum[i] += p[i];
    }
  }
  const T inv = T(1) / static_cast<T>(passes);
  for (auto& v : sum.data) v *= inv;

  UncertaintyMap<T> umap;
  umap.passes = passes;
  umap.sigma = sigma;
  umap.values = Tensor<T>::zeros(sum.shape);
  const T lo = static_cast<T>(kProbEps);
  const T hi = T(1) - static_cast<T>(kProbEps);
  for (std::int64_t i = 0; i < sum.numel(); ++i) {
    const T u = std::min(hi, std::max(lo, sum[i]));
    umap.values[i] = -(u * std::log(u) + (T(1) - u) * std::log(T(1) - u));
  }
  return {std::move(sum), std::move(umap)};
}

/// Writes the map as 8-bit PGM, scaling [0, ln 2] linearly onto [0, 255]
/// (round-half-to-even). Accepts [N,1,H,W] with N=1, [1,H,W], or [H,W].
template <typename T>
void emit_visualization(const UncertaintyMap<T>& umap, const std::string& path) {
  Tensor<double> v = umap.values.template cast<double>();
  if (v.rank() == 4) {
    if (v.shape[0] != 1 || v.shape[1] != 1) {
      throw ShapeError("emit_visualization: batched maps must be 1x1xHxW");
    }
    v.shape = {v.shape[2], v.shape[3]};
  }
  const double ln2 = std::log(2.0);
  for (auto& x : v.data) x /= ln2;  // [0, ln2] -> [0, 1]
  save_pgm(v, path, PgmRange::kZeroOne);
}

}  // namespace ugseg
