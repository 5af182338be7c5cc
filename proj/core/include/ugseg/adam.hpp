#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ugseg/autodiff.hpp"
#include "ugseg/errors.hpp"

namespace ugseg {

/// Per-parameter first/second moment buffers plus the shared step counter.
/// Buffers are allocated lazily on the first step and are keyed by position,
/// so the parameter list must be stable across steps.
template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update over `params`, consuming (and then zeroing)
/// the accumulated gradients.
///
/// Preconditions: every parameter requires a gradient and has one accumulated
/// (ValueError otherwise); lr > 0 (ValueError).  With all-zero gradients the
/// parameter values are bitwise unchanged while the step counter still
/// advances.
template <typename T>
void adam_step(std::vector<std::pair<std::string, Var<T>>>& params, AdamState<T>& state,
               double lr) {
  if (!(lr > 0.0)) throw ValueError("adam_step: lr must be > 0");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].second->value.data.size(), T(0));
      state.v[i].assign(params[i].second->value.data.size(), T(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw ValueError("adam_step: parameter count changed since the state was created");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T one_m_b1 = static_cast<T>(1.0 - state.beta1);
  const T one_m_b2 = static_cast<T>(1.0 - state.beta2);
  const T inv_bc1 = static_cast<T>(1.0 / bc1);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);
  const T eps = static_cast<T>(state.eps);
  const T step_lr = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& node = *params[i].second;
    if (!node.requires_grad) {
      throw ValueError("adam_step: parameter '" + params[i].first +
                       "' does not require gradients");
    }
    if (node.grad.empty()) {
      throw ValueError("adam_step: parameter '" + params[i].first +
                       "' has no accumulated gradient");
    }
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != node.value.data.size()) {
      throw ValueError("adam_step: parameter '" + params[i].first +
                       "' changed size since the state was created");
    }
    T* p = node.value.data.data();
    T* g = node.grad.data();
    const std::size_t n = m.size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + one_m_b1 * g[j];
      v[j] = b2 * v[j] + one_m_b2 * g[j] * g[j];
      const T mhat = m[j] * inv_bc1;
      const T vhat = v[j] * inv_bc2;
      p[j] -= step_lr * mhat / (std::sqrt(vhat) + eps);
      g[j] = T(0);
    }
  }
}

}  // namespace ugseg
