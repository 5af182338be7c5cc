#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ugseg/errors.hpp"
#include "ugseg/metrics.hpp"
#include "ugseg/rng.hpp"
#include "ugseg/tensor.hpp"

using namespace ugseg;

namespace {

BinaryMask from_rows(const std::vector<std::vector<int>>& rows) {
  BinaryMask m;
  m.h = static_cast<std::int64_t>(rows.size());
  m.w = static_cast<std::int64_t>(rows[0].size());
  for (const auto& r : rows) {
    for (int v : r) m.v.push_back(static_cast<std::uint8_t>(v));
  }
  return m;
}

BinaryMask random_mask(std::int64_t h, std::int64_t w, std::uint64_t seed,
                       double fg = 0.4) {
  Rng rng(seed);
  BinaryMask m;
  m.h = h;
  m.w = w;
  m.v.resize(static_cast<std::size_t>(h * w));
  for (auto& v : m.v) v = rng.uniform() < fg ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------------
// Independent brute-force oracles, written directly from the definitions.
// ---------------------------------------------------------------------------

double oracle_dsc(const BinaryMask& a, const BinaryMask& b) {
  std::int64_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    inter += a.v[i] != 0 && b.v[i] != 0;
    na += a.v[i] != 0;
    nb += b.v[i] != 0;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

std::vector<std::pair<std::int64_t, std::int64_t>> oracle_boundary(
    const BinaryMask& m) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  auto bg = [&](std::int64_t y, std::int64_t x) {
    if (y < 0 || y >= m.h || x < 0 || x >= m.w) return true;
    return m.at(y, x) == 0;
  };
  for (std::int64_t y = 0; y < m.h; ++y) {
    for (std::int64_t x = 0; x < m.w; ++x) {
      if (m.at(y, x) != 0 &&
          (bg(y - 1, x) || bg(y + 1, x) || bg(y, x - 1) || bg(y, x + 1))) {
        out.emplace_back(y, x);
      }
    }
  }
  return out;
}

std::optional<double> oracle_asd(const BinaryMask& a, const BinaryMask& b) {
  auto ba = oracle_boundary(a);
  auto bb = oracle_boundary(b);
  if (ba.empty() || bb.empty()) return std::nullopt;
  auto nearest = [](const std::pair<std::int64_t, std::int64_t>& p,
                    const std::vector<std::pair<std::int64_t, std::int64_t>>& set) {
    double best = 1e300;
    for (const auto& q : set) {
      const double dy = static_cast<double>(p.first - q.first);
      const double dx = static_cast<double>(p.second - q.second);
      best = std::min(best, std::sqrt(dy * dy + dx * dx));
    }
    return best;
  };
  double sum = 0.0;
  for (const auto& p : ba) sum += nearest(p, bb);
  for (const auto& q : bb) sum += nearest(q, ba);
  return sum / static_cast<double>(ba.size() + bb.size());
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("dsc basics: identity, disjoint, both-empty") {
    BinaryMask a = random_mask(8, 8, 1);
    CHECK(dsc(a, a) == 1.0);
    BinaryMask l = from_rows({{1, 1, 0, 0}, {1, 1, 0, 0}});
    BinaryMask r = from_rows({{0, 0, 1, 1}, {0, 0, 1, 1}});
    CHECK(dsc(l, r) == 0.0);
    BinaryMask e1 = from_rows({{0, 0}, {0, 0}});
    BinaryMask e2 = from_rows({{0, 0}, {0, 0}});
    CHECK(dsc(e1, e2) == 1.0);
  }

  TEST_CASE("dsc frozen 0.5 block overlap") {
    // 2x2 block at cols {0,1} vs cols {1,2}: intersection 2, sizes 4+4.
    BinaryMask a = from_rows(
        {{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    BinaryMask b = from_rows(
        {{0, 1, 1, 0}, {0, 1, 1, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    CHECK(dsc(a, b) == 0.5);
  }

  TEST_CASE("boundary: 4-connectivity with off-grid background") {
    // Solid 3x3 block in a 5x5 grid: all 8 ring pixels are boundary, the
    // center is interior.
    BinaryMask m = from_rows({{0, 0, 0, 0, 0},
                              {0, 1, 1, 1, 0},
                              {0, 1, 1, 1, 0},
                              {0, 1, 1, 1, 0},
                              {0, 0, 0, 0, 0}});
    auto b = boundary(m);
    CHECK(b.size() == 8);
    for (const auto& [y, x] : b) CHECK(!(y == 2 && x == 2));
    // A full-grid mask is all boundary (off-grid counts as background).
    BinaryMask full = from_rows({{1, 1}, {1, 1}});
    CHECK(boundary(full).size() == 4);
    // Empty mask has an empty boundary.
    BinaryMask empty = from_rows({{0, 0}, {0, 0}});
    CHECK(boundary(empty).empty());
  }

  TEST_CASE("asd basics: identity, point pair, offset lines") {
    BinaryMask a = random_mask(8, 8, 2);
    auto self = asd(a, a);
    REQUIRE(self.has_value());
    CHECK(*self == 0.0);

    // Two single pixels 3 columns apart.
    BinaryMask p = from_rows({{0, 0, 0, 0, 0}, {0, 1, 0, 0, 0}});
    BinaryMask q = from_rows({{0, 0, 0, 0, 0}, {0, 0, 0, 0, 1}});
    auto d = asd(p, q);
    REQUIRE(d.has_value());
    CHECK(*d == doctest::Approx(3.0).epsilon(1e-12));

    // Two horizontal 5-pixel lines, same columns, rows offset by 2.
    BinaryMask l1 = from_rows({{1, 1, 1, 1, 1},
                               {0, 0, 0, 0, 0},
                               {0, 0, 0, 0, 0},
                               {0, 0, 0, 0, 0}});
    BinaryMask l2 = from_rows({{0, 0, 0, 0, 0},
                               {0, 0, 0, 0, 0},
                               {1, 1, 1, 1, 1},
                               {0, 0, 0, 0, 0}});
    auto dl = asd(l1, l2);
    REQUIRE(dl.has_value());
    CHECK(*dl == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("asd empty-mask cases are nullopt") {
    BinaryMask e = from_rows({{0, 0}, {0, 0}});
    BinaryMask f = from_rows({{1, 0}, {0, 0}});
    CHECK(!asd(e, f).has_value());
    CHECK(!asd(f, e).has_value());
    CHECK(!asd(e, e).has_value());
  }

  TEST_CASE("dsc and asd match brute-force oracles on 10 seeded 16x16 pairs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      BinaryMask a = random_mask(16, 16, 1000 + seed, 0.35);
      BinaryMask b = random_mask(16, 16, 2000 + seed, 0.35);
      CHECK(dsc(a, b) == oracle_dsc(a, b));  // exact: same integer arithmetic
      auto got = asd(a, b);
      auto want = oracle_asd(a, b);
      REQUIRE(got.has_value() == want.has_value());
      if (want.has_value()) {
        CHECK(*got == doctest::Approx(*want).epsilon(1e-9));
      }
      // Boundary sets agree with the oracle exactly (row-major order).
      auto gb = boundary(a);
      auto wb = oracle_boundary(a);
      REQUIRE(gb.size() == wb.size());
      for (std::size_t i = 0; i < gb.size(); ++i) CHECK(gb[i] == wb[i]);
    }
  }

  TEST_CASE("symmetry and bounds on random pairs") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      BinaryMask a = random_mask(12, 12, 3000 + seed);
      BinaryMask b = random_mask(12, 12, 4000 + seed);
      const double d1 = dsc(a, b);
      CHECK(d1 == dsc(b, a));
      CHECK(d1 >= 0.0);
      CHECK(d1 <= 1.0);
      auto s1 = asd(a, b);
      auto s2 = asd(b, a);
      REQUIRE(s1.has_value());
      CHECK(*s1 == doctest::Approx(*s2).epsilon(1e-12));
      CHECK(*s1 >= 0.0);
    }
  }

  TEST_CASE("asd translation invariance") {
    BinaryMask a = from_rows({{0, 0, 0, 0, 0, 0},
                              {0, 1, 1, 0, 0, 0},
                              {0, 1, 1, 0, 0, 0},
                              {0, 0, 0, 0, 0, 0},
                              {0, 0, 0, 0, 0, 0},
                              {0, 0, 0, 0, 0, 0}});
    BinaryMask b = from_rows({{0, 0, 0, 0, 0, 0},
                              {0, 0, 0, 1, 0, 0},
                              {0, 0, 0, 0, 0, 0},
                              {0, 0, 0, 0, 0, 0},
                              {0, 0, 0, 0, 0, 0},
                              {0, 0, 0, 0, 0, 0}});
    auto base = asd(a, b);
    // Shift both masks down-right by (2, 1).
    auto shift = [](const BinaryMask& m, std::int64_t dy, std::int64_t dx) {
      BinaryMask out;
      out.h = m.h;
      out.w = m.w;
      out.v.assign(m.v.size(), 0);
      for (std::int64_t y = 0; y + dy < m.h; ++y) {
        for (std::int64_t x = 0; x + dx < m.w; ++x) {
          out.v[static_cast<std::size_t>((y + dy) * m.w + (x + dx))] = m.at(y, x);
        }
      }
      return out;
    };
    auto moved = asd(shift(a, 2, 1), shift(b, 2, 1));
    REQUIRE(base.has_value());
    REQUIRE(moved.has_value());
    CHECK(*base == doctest::Approx(*moved).epsilon(1e-12));
  }

  TEST_CASE("binarize conventions and validation") {
    Tensor<double> p = Tensor<double>::full({1, 1, 2, 2}, 0.5);
    BinaryMask m = binarize(p, 0.5);
    CHECK(m.h == 2);
    CHECK(m.w == 2);
    for (auto v : m.v) CHECK(v == 1);  // >= threshold is foreground

    Tensor<double> q = Tensor<double>::full({2, 2}, 0.4999);
    for (auto v : binarize(q, 0.5).v) CHECK(v == 0);

    // Idempotence: re-binarizing the {0,1} plane changes nothing.
    Tensor<double> bin = Tensor<double>::zeros({2, 2});
    bin[0] = 1.0;
    BinaryMask m1 = binarize(bin, 0.5);
    Tensor<double> round = Tensor<double>::zeros({2, 2});
    for (std::int64_t i = 0; i < 4; ++i) round[i] = m1.v[static_cast<std::size_t>(i)];
    BinaryMask m2 = binarize(round, 0.5);
    CHECK(m1.v == m2.v);

    CHECK_THROWS_AS((void)binarize(p, 0.0), ValueError);
    CHECK_THROWS_AS((void)binarize(p, 1.0), ValueError);
    CHECK_THROWS_AS((void)binarize(Tensor<double>::zeros({2, 2, 2}), 0.5),
                    ShapeError);
    CHECK_NOTHROW((void)binarize(Tensor<double>::zeros({1, 2, 2}), 0.5));
  }

  TEST_CASE("dsc/asd shape mismatch raises ShapeError") {
    BinaryMask a = random_mask(4, 4, 9);
    BinaryMask b = random_mask(4, 5, 9);
    CHECK_THROWS_AS((void)dsc(a, b), ShapeError);
    CHECK_THROWS_AS((void)asd(a, b), ShapeError);
  }
}
