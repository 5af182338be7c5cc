#pragma once

#include <cmath>
#include <map>
#include <string>

#include "ugseg/autodiff.hpp"
#include "ugseg/counters.hpp"
#include "ugseg/nn.hpp"
#include "ugseg/uncertainty.hpp"

namespace ugseg {

/// A differentiable scalar plus its per-component breakdown (plain values,
/// for logging). The weighted components always sum to the scalar.
template <typename T>
struct LossValue {
  Var<T> value;  // rank-0
  std::map<std::string, double> breakdown;

  double total() const { return static_cast<double>(value->value[0]); }
};

namespace detail {

template <typename T>
void check_pred_target(const Var<T>& p, const Tensor<T>& y, const char* what) {
  if (p->value.rank() != 4 || p->value.shape[1] != 1) {
    throw ShapeError(std::string(what) + ": predictions must be Nx1xHxW, got " +
                     shape_str(p->value.shape));
  }
  require_same_shape(p->value, y, what);
}

template <typename T>
void check_binary(const Tensor<T>& y, const char* what) {
  for (const T& v : y.data) {
    if (v != T(0) && v != T(1)) {
      throw ValueError(std::string(what) + ": ground truth must be binary {0,1}");
    }
  }
}

/// Clamps a probability tensor into [eps, 1-eps] without building graph.
template <typename T>
Tensor<T> clamp_probs(Tensor<T> p) {
  const T lo = static_cast<T>(kProbEps);
  const T hi = T(1) - static_cast<T>(kProbEps);
  for (auto& v : p.data) v = std::min(hi, std::max(lo, v));
  return p;
}

}  // namespace detail

/// Eq. 2 (squared-denominator Dice), computed per sample and averaged over
/// the batch; numerator and denominator share the 1e-7 guard so a perfect
/// prediction scores exactly 0.
template <typename T>
LossValue<T> dice_loss(const Var<T>& p, const Tensor<T>& y) {
  detail::check_pred_target(p, y, "dice_loss");
  detail::check_binary(y, "dice_loss");
  const T eps = static_cast<T>(1e-7);
  const std::int64_t n = y.shape[0];
  const std::int64_t inner = y.numel() / n;
  Tensor<T> y_sq_sum = Tensor<T>::zeros({n});
  for (std::int64_t i = 0; i < n; ++i) {
    T s = T(0);
    for (std::int64_t j = 0; j < inner; ++j) {
      const T v = y[i * inner + j];
      s += v * v;
    }
    y_sq_sum[i] = s;
  }
  auto yc = constant(y);
  auto s_py = sum_per_sample(mul(p, yc));  // [N]
  auto s_p2 = sum_per_sample(mul(p, p));   // [N]
  auto num = add_scalar(scale(s_py, T(2)), eps);
  auto den = add_scalar(add(s_p2, constant(y_sq_sum)), eps);
  auto per_sample = rsub_scalar(T(1), divide(num, den));
  LossValue<T> out;
  out.value = mean_all(per_sample);
  out.breakdown["dice"] = out.total();
  return out;
}

namespace detail {

/// Shared core of Eqs. 3 and 10: the per-pixel cross-entropy integrand is
/// multiplied by `weight` (empty => unweighted), summed over pixels, scaled
/// by -1/HW per sample, then batch-averaged.
template <typename T>
LossValue<T> weighted_bce(const Var<T>& p, const Tensor<T>& y, const Tensor<T>* weight,
                          const char* what, const char* key) {
  check_pred_target(p, y, what);
  check_binary(y, what);
  const std::int64_t n = y.shape[0];
  const std::int64_t hw = y.numel() / n;
  auto pc = clamp(p, static_cast<T>(kProbEps), T(1) - static_cast<T>(kProbEps));
  auto yc = constant(y);
  Tensor<T> one_minus_y = y;
  for (auto& v : one_minus_y.data) v = T(1) - v;
  auto term = add(mul(yc, log(pc)),
                  mul(constant(std::move(one_minus_y)), log(rsub_scalar(T(1), pc))));
  if (weight != nullptr) {
    require_same_shape(*weight, y, what);
    term = mul(constant(*weight), term);
  }
  auto per_sample = scale(sum_per_sample(term), T(-1) / static_cast<T>(hw));
  LossValue<T> out;
  out.value = mean_all(per_sample);
  out.breakdown[key] = out.total();
  return out;
}

}  // namespace detail

/// Eq. 3: plain binary cross-entropy, batch-averaged.
template <typename T>
LossValue<T> bce_loss(const Var<T>& p, const Tensor<T>& y) {
  return detail::weighted_bce<T>(p, y, nullptr, "bce_loss", "ce");
}

/// Eq. 10: cross-entropy with the (constant) uncertainty map as per-pixel
/// weight. No gradient flows through u.
template <typename T>
LossValue<T> uw_bce_loss(const Var<T>& p, const Tensor<T>& y, const Tensor<T>& u) {
  return detail::weighted_bce<T>(p, y, &u, "uw_bce_loss", "uce");
}

template <typename T>
LossValue<T> uw_bce_loss(const Var<T>& p, const Tensor<T>& y,
                         const UncertaintyMap<T>& u) {
  return uw_bce_loss(p, y, u.values);
}

/// Eq. 1: Dice + BCE.
template <typename T>
LossValue<T> hybrid_seg_loss(const Var<T>& p, const Tensor<T>& y) {
  LossValue<T> d = dice_loss(p, y);
  LossValue<T> c = bce_loss(p, y);
  LossValue<T> out;
  out.value = add(d.value, c.value);
  out.breakdown = d.breakdown;
  out.breakdown.insert(c.breakdown.begin(), c.breakdown.end());
  return out;
}

/// Eq. 11: Dice (unweighted, as written) + uncertainty-weighted BCE.
template <typename T>
LossValue<T> uw_hybrid_loss(const Var<T>& p, const Tensor<T>& y, const Tensor<T>& u) {
  LossValue<T> d = dice_loss(p, y);
  LossValue<T> c = uw_bce_loss(p, y, u);
  LossValue<T> out;
  out.value = add(d.value, c.value);
  out.breakdown = d.breakdown;
  out.breakdown.insert(c.breakdown.begin(), c.breakdown.end());
  return out;
}

template <typename T>
LossValue<T> uw_hybrid_loss(const Var<T>& p, const Tensor<T>& y,
                            const UncertaintyMap<T>& u) {
  return uw_hybrid_loss(p, y, u.values);
}

/// Eq. 8: mean per-pixel KL(student || teacher) between the two-point
/// distributions {p, 1-p}. The teacher side is a plain tensor, i.e.
/// gradient-detached by construction.
template <typename T>
LossValue<T> kl_consistency(const Var<T>& p_student, const Tensor<T>& p_teacher) {
  detail::check_pred_target(p_student, p_teacher, "kl_consistency");
  ++counters().kl_consistency;
  const std::int64_t n = p_teacher.shape[0];
  const std::int64_t hw = p_teacher.numel() / n;
  const Tensor<T> pt = detail::clamp_probs(p_teacher);
  Tensor<T> log_pt = pt;
  Tensor<T> log_1m_pt = pt;
  for (std::int64_t i = 0; i < pt.numel(); ++i) {
    log_pt[i] = std::log(pt[i]);
    log_1m_pt[i] = std::log(T(1) - pt[i]);
  }
  auto ps = clamp(p_student, static_cast<T>(kProbEps), T(1) - static_cast<T>(kProbEps));
  auto one_minus_ps = rsub_scalar(T(1), ps);
  auto term = add(mul(ps, sub(log(ps), constant(std::move(log_pt)))),
                  mul(one_minus_ps,
                      sub(log(one_minus_ps), constant(std::move(log_1m_pt)))));
  auto per_sample = scale(sum_per_sample(term), T(1) / static_cast<T>(hw));
  LossValue<T> out;
  out.value = mean_all(per_sample);
  out.breakdown["con"] = out.total();
  return out;
}

/// Eq. 12: uncertainty-weighted hybrid on both the clean and augmented
/// predictions plus beta_eff-weighted consistency.
template <typename T>
LossValue<T> overall_loss(const Var<T>& f_x, const Var<T>& f_xhat,
                          const Tensor<T>& g_xhat, const Tensor<T>& y,
                          const Tensor<T>& u, double beta_eff) {
  if (beta_eff < 0.0) throw ValueError("overall_loss: beta_eff must be >= 0");
  LossValue<T> a = uw_hybrid_loss(f_x, y, u);
  LossValue<T> b = uw_hybrid_loss(f_xhat, y, u);
  LossValue<T> c = kl_consistency(f_x, g_xhat);
  LossValue<T> out;
  out.value = add(add(a.value, b.value), scale(c.value, static_cast<T>(beta_eff)));
  out.breakdown["dice"] = a.breakdown.at("dice") + b.breakdown.at("dice");
  out.breakdown["uce"] = a.breakdown.at("uce") + b.breakdown.at("uce");
  out.breakdown["con"] = c.breakdown.at("con");
  out.breakdown["beta_eff"] = beta_eff;
  return out;
}

template <typename T>
LossValue<T> overall_loss(const Var<T>& f_x, const Var<T>& f_xhat,
                          const Tensor<T>& g_xhat, const Tensor<T>& y,
                          const UncertaintyMap<T>& u, double beta_eff) {
  return overall_loss(f_x, f_xhat, g_xhat, y, u.values, beta_eff);
}

/// Sigmoid ramp-up (mean-teacher convention) over the first
/// ceil(total_epochs/10) epochs: beta_max * exp(-5 (1-t)^2), t = epoch/R
/// capped at 1.
inline double beta_rampup(std::int64_t epoch, std::int64_t total_epochs,
                          double beta_max) {
  if (total_epochs < 10) throw ValueError("beta_rampup: total_epochs must be >= 10");
  if (epoch < 0) throw ValueError("beta_rampup: epoch must be >= 0");
  const double ramp = std::ceil(static_cast<double>(total_epochs) / 10.0);
  const double t = std::min(static_cast<double>(epoch) / ramp, 1.0);
  return beta_max * std::exp(-5.0 * (1.0 - t) * (1.0 - t));
}

}  // namespace ugseg
