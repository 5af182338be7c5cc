#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ugseg/autodiff.hpp"
#include "ugseg/checkpoint.hpp"
#include "ugseg/counters.hpp"
#include "ugseg/nn.hpp"
#include "ugseg/rng.hpp"

namespace ugseg {

/// Kaiming fan-in initialized conv kernel: N(0, 2/fan_in) with
/// fan_in = in_ch * k * k.
template <typename T>
Tensor<T> kaiming_kernel(Rng& rng, std::int64_t out_ch, std::int64_t in_ch,
                         std::int64_t k) {
  Tensor<T> w = Tensor<T>::zeros({out_ch, in_ch, k, k});
  const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * k * k));
  for (auto& v : w.data) v = static_cast<T>(rng.gaussian(0.0, stddev));
  return w;
}

/// 3-level mini-UNet (channels 8 -> 16 -> 32, two 3x3 conv+relu per level,
/// skip concatenations, 1x1 conv + sigmoid head). The same type serves as
/// gradient-trained student and EMA teacher; a teacher's parameters are
/// plain constants, so no graph is ever built through it.
template <typename T>
struct SegNetwork {
  std::vector<std::pair<std::string, Var<T>>> params;  // fixed order
  std::int64_t in_channels = 1;
  double dropout_rate = 0.1;
  bool trainable = true;

  static constexpr std::int64_t kC1 = 8, kC2 = 16, kC3 = 32;

  const Var<T>& param(const std::string& name) const {
    for (const auto& [n, p] : params) {
      if (n == name) return p;
    }
    throw ValueError("SegNetwork: unknown parameter " + name);
  }

  static SegNetwork init(Rng& rng, std::int64_t in_channels = 1,
                         double dropout_rate = 0.1) {
    SegNetwork net;
    net.in_channels = in_channels;
    net.dropout_rate = dropout_rate;
    auto add_conv = [&](const std::string& name, std::int64_t out_ch,
                        std::int64_t in_ch, std::int64_t k) {
      net.params.emplace_back(name + ".w",
                              parameter(kaiming_kernel<T>(rng, out_ch, in_ch, k),
                                        name + ".w"));
      net.params.emplace_back(name + ".b",
                              parameter(Tensor<T>::zeros({out_ch}), name + ".b"));
    };
    add_conv("enc1.conv1", kC1, in_channels, 3);
    add_conv("enc1.conv2", kC1, kC1, 3);
    add_conv("enc2.conv1", kC2, kC1, 3);
    add_conv("enc2.conv2", kC2, kC2, 3);
    add_conv("bott.conv1", kC3, kC2, 3);
    add_conv("bott.conv2", kC3, kC3, 3);
    add_conv("dec2.conv1", kC2, kC3 + kC2, 3);
    add_conv("dec2.conv2", kC2, kC2, 3);
    add_conv("dec1.conv1", kC1, kC2 + kC1, 3);
    add_conv("dec1.conv2", kC1, kC1, 3);
    add_conv("out.conv", 1, kC1, 1);
    return net;
  }

  /// Deep copy with gradient tracking disabled on every parameter.
  SegNetwork clone_as_teacher() const {
    SegNetwork t;
    t.in_channels = in_channels;
    t.dropout_rate = dropout_rate;
    t.trainable = false;
    t.params.reserve(params.size());
    for (const auto& [name, p] : params) {
      t.params.emplace_back(name, constant(p->value));
    }
    return t;
  }

  /// Forward pass. stochastic=true enables input noise (noise_sigma) and
  /// dropout; stochastic=false is fully deterministic. The result is a graph
  /// node for trainable networks and a plain constant otherwise.
  Var<T> forward(const Tensor<T>& x, bool stochastic, double noise_sigma,
                 Rng& rng) const {
    if (x.rank() != 4) throw ShapeError("SegNetwork: input must be NxCxHxW");
    if (x.shape[1] != in_channels) {
      throw ShapeError("SegNetwork: expected " + std::to_string(in_channels) +
                       " input channels, got " + std::to_string(x.shape[1]));
    }
    if (x.shape[2] % 4 != 0 || x.shape[3] % 4 != 0 || x.shape[2] == 0 ||
        x.shape[3] == 0) {
      throw ShapeError("SegNetwork: H and W must be divisible by 4, got " +
                       shape_str(x.shape));
    }
    Var<T> in = constant(stochastic && noise_sigma > 0.0
                             ? add_gaussian_noise(x, noise_sigma, rng)
                             : x);
    auto block = [&](const std::string& name, const Var<T>& v) {
      auto c1 = relu(conv2d(v, param(name + ".conv1.w"), param(name + ".conv1.b"), 1));
      auto c2 = relu(conv2d(c1, param(name + ".conv2.w"), param(name + ".conv2.b"), 1));
      return dropout(c2, dropout_rate, rng, stochastic);
    };
    auto e1 = block("enc1", in);                                   // [N,8,H,W]
    auto e2 = block("enc2", maxpool2(e1));                         // [N,16,H/2,W/2]
    auto b = block("bott", maxpool2(e2));                          // [N,32,H/4,W/4]
    auto d2 = block("dec2", concat_channels(upsample2_nearest(b), e2));
    auto d1 = block("dec1", concat_channels(upsample2_nearest(d2), e1));
    return sigmoid(conv2d(d1, param("out.conv.w"), param("out.conv.b"), 0));
  }

  std::vector<NamedTensor> to_named_tensors() const {
    std::vector<NamedTensor> out;
    out.reserve(params.size());
    for (const auto& [name, p] : params) {
      out.push_back({name, p->value.template cast<float>()});
    }
    return out;
  }

  /// Overwrites parameter values from checkpoint tensors (matched by name;
  /// all parameters must be covered and shapes must agree).
  void load_named_tensors(const std::vector<NamedTensor>& tensors) {
    for (auto& [name, p] : params) {
      const NamedTensor* found = nullptr;
      for (const auto& t : tensors) {
        if (t.name == name) {
          found = &t;
          break;
        }
      }
      if (!found) throw ValueError("SegNetwork: checkpoint missing parameter " + name);
      if (found->value.shape != p->value.shape) {
        throw ShapeError("SegNetwork: checkpoint shape mismatch for " + name + ": " +
                         shape_str(found->value.shape) + " vs " +
                         shape_str(p->value.shape));
      }
      p->value = found->value.template cast<T>();
    }
  }
};

/// Eq.-(7) exponential moving average: phi <- m*phi + (1-m)*theta, in place
/// on the teacher. The teacher never receives gradients.
template <typename T>
void ema_update(SegNetwork<T>& teacher, const SegNetwork<T>& student, double m) {
  if (!(m >= 0.0 && m <= 1.0)) throw ValueError("ema_update: m must be in [0,1]");
  if (teacher.params.size() != student.params.size()) {
    throw ValueError("ema_update: parameter-set mismatch");
  }
  ++counters().ema_update;
  const T tm = static_cast<T>(m);
  const T sm = static_cast<T>(1.0 - m);
  for (std::size_t i = 0; i < teacher.params.size(); ++i) {
    auto& [tn, tp] = teacher.params[i];
    const auto& [sn, sp] = student.params[i];
    if (tn != sn || tp->value.shape != sp->value.shape) {
      throw ValueError("ema_update: parameter-set mismatch at " + tn);
    }
    for (std::size_t j = 0; j < tp->value.data.size(); ++j) {
      tp->value.data[j] = tm * tp->value.data[j] + sm * sp->value.data[j];
    }
  }
}

}  // namespace ugseg
