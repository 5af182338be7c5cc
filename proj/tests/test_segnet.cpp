#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "ugseg/checkpoint.hpp"
#include "ugseg/counters.hpp"
#include "ugseg/errors.hpp"
#include "ugseg/pgm.hpp"
#include "ugseg/rng.hpp"
#include "ugseg/segnet.hpp"
#include "ugseg/tensor.hpp"
#include "ugseg/uncertainty.hpp"

using namespace ugseg;

namespace {

Tensor<double> random_input(std::int64_t n, std::int64_t h, std::int64_t w,
                            std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> t = Tensor<double>::zeros({n, 1, h, w});
  for (auto& v : t.data) v = 2.0 * rng.uniform() - 1.0;
  return t;
}

double max_abs_param_diff(const SegNetwork<double>& a, const SegNetwork<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const auto& av = a.params[i].second->value;
    const auto& bv = b.params[i].second->value;
    for (std::int64_t j = 0; j < av.numel(); ++j) {
      m = std::max(m, std::abs(av[j] - bv[j]));
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("segnet") {
  TEST_CASE("init is seed-deterministic and clone is bitwise") {
    Rng r1(5), r2(5);
    auto a = SegNetwork<double>::init(r1);
    auto b = SegNetwork<double>::init(r2);
    CHECK(a.params.size() == b.params.size());
    CHECK(max_abs_param_diff(a, b) == 0.0);
    auto t = a.clone_as_teacher();
    CHECK(t.trainable == false);
    CHECK(max_abs_param_diff(a, t) == 0.0);
    for (const auto& [name, p] : t.params) CHECK(p->requires_grad == false);
  }

  TEST_CASE("kaiming kernels match the 2/fan_in variance within 20%") {
    Rng rng(11);
    const std::int64_t out_ch = 16, in_ch = 16, k = 3;
    Tensor<double> w = kaiming_kernel<double>(rng, out_ch, in_ch, k);
    double mean = 0.0;
    for (auto v : w.data) mean += v;
    mean /= static_cast<double>(w.numel());
    double var = 0.0;
    for (auto v : w.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.numel() - 1);
    const double want = 2.0 / static_cast<double>(in_ch * k * k);
    CHECK(var == doctest::Approx(want).epsilon(0.2));
  }

  TEST_CASE("forward shape, range, and determinism") {
    Rng rng(7);
    auto net = SegNetwork<double>::init(rng);
    Tensor<double> x = random_input(2, 16, 24, 3);
    Rng f1(1), f2(1), f3(2);
    Var<double> y1 = net.forward(x, false, 0.0, f1);
    Var<double> y2 = net.forward(x, false, 0.0, f2);
    CHECK(y1->value.shape == Shape{2, 1, 16, 24});
    for (std::int64_t i = 0; i < y1->value.numel(); ++i) {
      CHECK(y1->value[i] >= 1e-7);
      CHECK(y1->value[i] <= 1.0 - 1e-7);
      CHECK(y1->value[i] == y2->value[i]);  // deterministic twice
    }
    // Even with a fresh rng state, deterministic mode ignores it.
    Var<double> y3 = net.forward(x, false, 0.5, f3);
    for (std::int64_t i = 0; i < y1->value.numel(); ++i) {
      CHECK(y1->value[i] == y3->value[i]);
    }
  }

  TEST_CASE("degenerate stochastic pass equals deterministic pass") {
    Rng rng(9);
    auto net = SegNetwork<double>::init(rng, 1, /*dropout_rate=*/0.0);
    Tensor<double> x = random_input(1, 16, 16, 4);
    Rng fa(3), fb(4);
    Var<double> det = net.forward(x, false, 0.0, fa);
    Var<double> sto = net.forward(x, true, 0.0, fb);
    for (std::int64_t i = 0; i < det->value.numel(); ++i) {
      CHECK(det->value[i] == doctest::Approx(sto->value[i]).epsilon(1e-7));
    }
  }

  TEST_CASE("stochastic forwards differ across substreams") {
    Rng rng(13);
    auto net = SegNetwork<double>::init(rng);  // dropout 0.1
    Tensor<double> x = random_input(1, 16, 16, 5);
    Rng fa(30), fb(31);
    Var<double> a = net.forward(x, true, 0.1, fa);
    Var<double> b = net.forward(x, true, 0.1, fb);
    double diff = 0.0;
    for (std::int64_t i = 0; i < a->value.numel(); ++i) {
      diff = std::max(diff, std::abs(a->value[i] - b->value[i]));
    }
    CHECK(diff > 0.0);
  }

  TEST_CASE("invalid inputs raise ShapeError") {
    Rng rng(15);
    auto net = SegNetwork<double>::init(rng);
    Rng f(1);
    CHECK_THROWS_AS((void)net.forward(Tensor<double>::zeros({1, 1, 18, 16}), false,
                                      0.0, f),
                    ShapeError);
    CHECK_THROWS_AS((void)net.forward(Tensor<double>::zeros({1, 1, 16, 10}), false,
                                      0.0, f),
                    ShapeError);
    CHECK_THROWS_AS((void)net.forward(Tensor<double>::zeros({1, 2, 16, 16}), false,
                                      0.0, f),
                    ShapeError);
    CHECK_THROWS_AS((void)net.forward(Tensor<double>::zeros({1, 16, 16}), false,
                                      0.0, f),
                    ShapeError);
  }

  TEST_CASE("ema_update exactness and fixed point") {
    Rng rng(17);
    auto student = SegNetwork<double>::init(rng);
    auto teacher = student.clone_as_teacher();

    // phi == theta beforehand -> unchanged for any m.
    ema_update(teacher, student, 0.99);
    CHECK(max_abs_param_diff(teacher, student) == 0.0);

    // Scalar probe of Eq. 7: phi=1, theta=0 -> phi = m exactly.
    auto t2 = student.clone_as_teacher();
    for (auto& [name, p] : t2.params) {
      for (auto& v : p->value.data) v = 1.0;
    }
    auto s2 = student.clone_as_teacher();  // convenient zero-grad deep copy
    for (auto& [name, p] : s2.params) {
      for (auto& v : p->value.data) v = 0.0;
    }
    SegNetwork<double> s2net;
    s2net.params = s2.params;
    s2net.in_channels = s2.in_channels;
    ema_update(t2, s2net, 0.99);
    for (const auto& [name, p] : t2.params) {
      for (auto v : p->value.data) CHECK(v == doctest::Approx(0.99).epsilon(1e-15));
    }

    // m=0 -> full copy of theta.
    ema_update(t2, s2net, 0.0);
    CHECK(max_abs_param_diff(t2, s2net) == 0.0);

    CHECK_THROWS_AS(ema_update(t2, s2net, -0.1), ValueError);
    CHECK_THROWS_AS(ema_update(t2, s2net, 1.5), ValueError);
  }

  TEST_CASE("EMA contraction: max-abs gap scales by m each step") {
    Rng rng(19);
    auto student = SegNetwork<double>::init(rng);
    auto teacher = student.clone_as_teacher();
    for (auto& [name, p] : teacher.params) {
      for (auto& v : p->value.data) v += 0.5;  // offset the teacher
    }
    double gap = max_abs_param_diff(teacher, student);
    CHECK(gap == doctest::Approx(0.5));
    for (int step = 0; step < 4; ++step) {
      ema_update(teacher, student, 0.9);
      const double next = max_abs_param_diff(teacher, student);
      CHECK(next == doctest::Approx(0.9 * gap).epsilon(1e-12));
      gap = next;
    }
  }

  TEST_CASE("teacher isolation: forwards never build graph or gradients") {
    Rng rng(21);
    auto student = SegNetwork<double>::init(rng);
    auto teacher = student.clone_as_teacher();
    Tensor<double> x = random_input(1, 16, 16, 6);
    Rng f(2);
    Var<double> out = teacher.forward(x, true, 0.1, f);
    CHECK(out->requires_grad == false);
    for (const auto& [name, p] : teacher.params) {
      CHECK(p->grad.empty());  // empty == all-zero, never touched
    }
  }

  TEST_CASE("named-tensor round trip restores parameters (float32 width)") {
    Rng rng(23);
    auto net = SegNetwork<double>::init(rng);
    std::vector<NamedTensor> named = net.to_named_tensors();
    CHECK(named.size() == net.params.size());

    auto other = SegNetwork<double>::init(rng);  // different values
    other.load_named_tensors(named);
    // Values agree to float32 precision after the cast round trip.
    CHECK(max_abs_param_diff(other, net) < 1e-6);

    // Missing parameter and shape mismatch both throw.
    std::vector<NamedTensor> missing(named.begin(), named.end() - 1);
    CHECK_THROWS_AS(other.load_named_tensors(missing), ValueError);
    std::vector<NamedTensor> bad = named;
    bad[0].value = Tensor<float>::zeros({1, 1, 3, 3});
    CHECK_THROWS_AS(other.load_named_tensors(bad), ShapeError);
  }

  TEST_CASE("unknown parameter name throws") {
    Rng rng(25);
    auto net = SegNetwork<double>::init(rng);
    CHECK_THROWS_AS((void)net.param("enc9.conv1.w"), ValueError);
  }
}

TEST_SUITE("uncertainty") {
  TEST_CASE("frozen entropies: 0.5 -> ln 2, 0.25 -> 0.562335") {
    // Degenerate teacher not needed: drive the entropy through estimate with
    // a handcrafted constant network is overkill; instead check the formula
    // through a real map by clamping mean predictions. Build a tiny teacher
    // whose output is effectively constant by zeroing all parameters: the
    // head then emits sigmoid(0) = 0.5 everywhere.
    Rng rng(31);
    auto net = SegNetwork<double>::init(rng, 1, 0.0);
    for (auto& [name, p] : net.params) {
      for (auto& v : p->value.data) v = 0.0;
    }
    auto teacher = net.clone_as_teacher();
    Tensor<double> x = random_input(1, 8, 8, 7);
    Rng f(3);
    auto [mean_pred, umap] = estimate_uncertainty(teacher, x, 1, 0.0, f);
    for (std::int64_t i = 0; i < mean_pred.numel(); ++i) {
      CHECK(mean_pred[i] == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(umap.values[i] == doctest::Approx(std::numbers::ln2).epsilon(1e-9));
    }
    // Direct formula probe at 0.25 (the frozen derived value).
    const double u = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
    CHECK(u == doctest::Approx(0.562335).epsilon(1e-5));
  }

  TEST_CASE("degenerate determinism: T=1, sigma=0, dropout 0") {
    Rng rng(33);
    auto net = SegNetwork<double>::init(rng, 1, 0.0);
    auto teacher = net.clone_as_teacher();
    Tensor<double> x = random_input(1, 16, 16, 8);
    Rng fa(4), fb(5);
    auto [mean_pred, umap] = estimate_uncertainty(teacher, x, 1, 0.0, fa);
    Var<double> det = teacher.forward(x, false, 0.0, fb);
    for (std::int64_t i = 0; i < mean_pred.numel(); ++i) {
      CHECK(mean_pred[i] == doctest::Approx(det->value[i]).epsilon(1e-7));
      const double p = std::min(1.0 - 1e-7, std::max(1e-7, det->value[i]));
      const double want = -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
      CHECK(umap.values[i] == doctest::Approx(want).epsilon(1e-7));
    }
  }

  TEST_CASE("range, finiteness, and entropy unimodality") {
    Rng rng(35);
    auto net = SegNetwork<double>::init(rng);
    auto teacher = net.clone_as_teacher();
    Tensor<double> x = random_input(2, 16, 16, 9);
    Rng f(6);
    auto [mean_pred, umap] = estimate_uncertainty(teacher, x, 4, 0.1, f);
    CHECK(umap.passes == 4);
    CHECK(umap.sigma == 0.1);
    for (std::int64_t i = 0; i < umap.values.numel(); ++i) {
      CHECK(std::isfinite(umap.values[i]));
      CHECK(umap.values[i] >= 0.0);
      CHECK(umap.values[i] <= std::numbers::ln2 + 1e-6);
    }
    // Pixels with mean prediction nearer 0.5 carry strictly larger entropy.
    for (std::int64_t i = 1; i < mean_pred.numel(); ++i) {
      const double da = std::abs(mean_pred[i - 1] - 0.5);
      const double db = std::abs(mean_pred[i] - 0.5);
      if (std::abs(da - db) > 1e-9) {
        CHECK((da < db) == (umap.values[i - 1] > umap.values[i]));
      }
    }
  }

  TEST_CASE("seed reproducibility and counters") {
    Rng rng(37);
    auto net = SegNetwork<double>::init(rng);
    auto teacher = net.clone_as_teacher();
    Tensor<double> x = random_input(1, 16, 16, 10);
    counters().reset();
    Rng fa(7), fb(7), fc(8);
    auto [m1, u1] = estimate_uncertainty(teacher, x, 3, 0.1, fa);
    auto [m2, u2] = estimate_uncertainty(teacher, x, 3, 0.1, fb);
    CHECK(counters().uncertainty_estimate == 2);
    CHECK(counters().teacher_forward == 6);
    for (std::int64_t i = 0; i < m1.numel(); ++i) {
      CHECK(m1[i] == m2[i]);
      CHECK(u1.values[i] == u2.values[i]);
    }
    auto [m3, u3] = estimate_uncertainty(teacher, x, 3, 0.1, fc);
    double diff = 0.0;
    for (std::int64_t i = 0; i < m1.numel(); ++i) {
      diff = std::max(diff, std::abs(m1[i] - m3[i]));
    }
    CHECK(diff > 0.0);
  }

  TEST_CASE("parameter validation") {
    Rng rng(39);
    auto net = SegNetwork<double>::init(rng);
    auto teacher = net.clone_as_teacher();
    Tensor<double> x = random_input(1, 8, 8, 11);
    Rng f(9);
    CHECK_THROWS_AS((void)estimate_uncertainty(teacher, x, 0, 0.1, f), ValueError);
    CHECK_THROWS_AS((void)estimate_uncertainty(teacher, x, 4, -0.1, f), ValueError);
  }

  TEST_CASE("visualization scales [0, ln2] onto [0, 255]") {
    UncertaintyMap<double> umap;
    umap.values = Tensor<double>::zeros({1, 1, 1, 4});
    umap.values[0] = 0.0;
    umap.values[1] = std::numbers::ln2;
    umap.values[2] = std::numbers::ln2 / 2.0;
    umap.values[3] = std::numbers::ln2;
    const std::string path = "/tmp/ugseg_test_umap.pgm";
    emit_visualization(umap, path);
    // load_pgm maps gray [0,255] onto [-1,1]: 0 -> -1, 255 -> +1.
    Tensor<double> back = load_pgm(path);
    CHECK(back.shape == Shape{1, 1, 4});  // [C,H,W]
    CHECK(back[0] == doctest::Approx(-1.0));
    CHECK(back[1] == doctest::Approx(1.0));
    CHECK(std::abs(back[2]) < 0.005);  // gray 127 or 128
    std::remove(path.c_str());

    UncertaintyMap<double> batched;
    batched.values = Tensor<double>::zeros({2, 1, 2, 2});
    CHECK_THROWS_AS(emit_visualization(batched, path), ShapeError);
  }
}
