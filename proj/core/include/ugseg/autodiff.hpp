#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ugseg/tensor.hpp"

namespace ugseg {

/// Thread-local switch: while disabled, operations produce plain values
/// with no recorded parents, so no graph is built (teacher passes, eval).
class GradMode {
 public:
  static bool enabled() { return enabled_; }
  static void set_enabled(bool on) { enabled_ = on; }

 private:
  static thread_local bool enabled_;
};
inline thread_local bool GradMode::enabled_ = true;

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
class Node;

template <typename T>
using Var = std::shared_ptr<Node<T>>;

/// One vertex of the reverse-mode tape. Value tensors are immutable once
/// produced by an operation; only grad buffers accumulate.
template <typename T>
class Node {
 public:
  Tensor<T> value;
  std::vector<T> grad;  // empty means all-zero; same length as value.data
  bool requires_grad = false;
  std::string name;
  std::vector<Var<T>> parents;
  std::function<void(Node<T>&)> backprop;

  explicit Node(Tensor<T> v) : value(std::move(v)) {}

  void ensure_grad() {
    if (grad.size() != value.data.size()) {
      grad.assign(value.data.size(), T(0));
    }
  }
  void zero_grad() {
    if (!grad.empty()) grad.assign(grad.size(), T(0));
  }
};

template <typename T>
Var<T> constant(Tensor<T> v) {
  return std::make_shared<Node<T>>(std::move(v));
}

template <typename T>
Var<T> parameter(Tensor<T> v, std::string name = {}) {
  auto n = std::make_shared<Node<T>>(std::move(v));
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

namespace detail {

template <typename T>
bool any_requires_grad(const std::vector<Var<T>>& parents) {
  for (const auto& p : parents) {
    if (p && p->requires_grad) return true;
  }
  return false;
}

/// Creates an op node. Outside grad mode (or with constant-only parents)
/// the parents and closure are dropped and the result is a plain constant.
template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backprop) {
  auto n = std::make_shared<Node<T>>(std::move(value));
  if (GradMode::enabled() && any_requires_grad(parents)) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* what) {
  for (const T& v : t.data) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw NumericError(std::string(what) + ": produced a non-finite value");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor<T> out = a->value;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
  return detail::make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "sub");
  Tensor<T> out = a->value;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
  return detail::make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] -= self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "mul");
  Tensor<T> out = a->value;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
  return detail::make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        a->grad[i] += self.grad[i] * b->value.data[i];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        b->grad[i] += self.grad[i] * a->value.data[i];
      }
    }
  });
}

template <typename T>
Var<T> divide(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "divide");
  for (std::int64_t i = 0; i < b->value.numel(); ++i) {
    if (b->value[i] == T(0)) throw ValueError("divide: division by zero");
  }
  Tensor<T> out = a->value;
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] /= b->value[i];
  return detail::make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        a->grad[i] += self.grad[i] / b->value.data[i];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const T bv = b->value.data[i];
        b->grad[i] -= self.grad[i] * a->value.data[i] / (bv * bv);
      }
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> out = a->value;
  for (auto& v : out.data) v *= s;
  return detail::make_op<T>(std::move(out), {a}, [a, s](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * s;
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  Tensor<T> out = a->value;
  for (auto& v : out.data) v += s;
  return detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
  });
}

/// s - a, elementwise.
template <typename T>
Var<T> rsub_scalar(T s, const Var<T>& a) {
  Tensor<T> out = a->value;
  for (auto& v : out.data) v = s - v;
  return detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] -= self.grad[i];
  });
}

template <typename T>
Var<T> log(const Var<T>& a) {
  Tensor<T> out = a->value;
  for (auto& v : out.data) {
    if (!(v > T(0))) throw ValueError("log: input must be positive");
    v = std::log(v);
  }
  return detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      a->grad[i] += self.grad[i] / a->value.data[i];
    }
  });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  Tensor<T> out = a->value;
  for (auto& v : out.data) v = std::exp(v);
  detail::check_finite(out, "exp");
  auto res = detail::make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      a->grad[i] += self.grad[i] * self.value.data[i];
    }
  });
  return res;
}

/// Clamp to [lo, hi]; gradient passes only strictly inside the interval.
template <typename T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
  if (!(lo <= hi)) throw ValueError("clamp: lo must be <= hi");
  Tensor<T> out = a->value;
  for (auto& v : out.data) v = v < lo ? lo : (v > hi ? hi : v);
  return detail::make_op<T>(std::move(out), {a}, [a, lo, hi](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T x = a->value.data[i];
      if (x > lo && x < hi) a->grad[i] += self.grad[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  T s = T(0);
  for (const auto& v : a->value.data) s += v;
  return detail::make_op<T>(Tensor<T>::scalar(s), {a}, [a](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    const T g = self.grad[0];
    for (auto& gv : a->grad) gv += g;
  });
}

template <typename T>
Var<T> mean_all(const Var<T>& a) {
  if (a->value.numel() == 0) throw ShapeError("mean_all: empty tensor");
  return scale(sum_all(a), T(1) / static_cast<T>(a->value.numel()));
}

/// Sums every axis but the first: NxC...xW -> [N].
template <typename T>
Var<T> sum_per_sample(const Var<T>& a) {
  if (a->value.rank() < 1) throw ShapeError("sum_per_sample: rank must be >= 1");
  const std::int64_t n = a->value.shape[0];
  const std::int64_t inner = n > 0 ? a->value.numel() / n : 0;
  Tensor<T> out = Tensor<T>::zeros({n});
  for (std::int64_t i = 0; i < n; ++i) {
    T s = T(0);
    for (std::int64_t j = 0; j < inner; ++j) s += a->value[i * inner + j];
    out[i] = s;
  }
  return detail::make_op<T>(std::move(out), {a}, [a, n, inner](Node<T>& self) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::int64_t i = 0; i < n; ++i) {
      const T g = self.grad[static_cast<std::size_t>(i)];
      for (std::int64_t j = 0; j < inner; ++j) {
        a->grad[static_cast<std::size_t>(i * inner + j)] += g;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

/// Reverse-mode sweep from a rank-0 loss. Leaf gradients accumulate across
/// repeated calls; interior gradients are reset at the start of each sweep.
template <typename T>
void backward(const Var<T>& loss) {
  if (!loss) throw ValueError("backward: null node");
  if (!loss->value.is_scalar()) {
    throw ShapeError("backward: loss must be a rank-0 scalar, got " +
                     shape_str(loss->value.shape));
  }
  // Iterative postorder over the requires-grad subgraph. Each node is
  // scheduled at most once; the graph is a DAG by construction.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> scheduled;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  if (loss->requires_grad) {
    stack.emplace_back(loss.get(), 0);
    scheduled.insert(loss.get());
  }
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next].get();
      ++next;
      if (p && p->requires_grad && scheduled.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node<T>* n : order) {
    if (n->backprop) n->zero_grad();
  }
  loss->ensure_grad();
  loss->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace ugseg
