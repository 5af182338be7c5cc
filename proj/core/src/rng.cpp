#include "ugseg/rng.hpp"

#include <cmath>

#include "ugseg/errors.hpp"

namespace ugseg {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng Rng::fork(std::uint64_t label) const {
  return Rng(seed_, mix64(stream_ * 0x9E3779B97F4A7C15ull + label + 1));
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
                         std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

inline std::array<std::uint32_t, 4> philox4x32_10(std::uint64_t counter,
                                                  std::uint64_t stream,
                                                  std::uint64_t key) {
  std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k0, k1);
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return ctr;
}

}  // namespace

std::uint32_t Rng::next_u32() {
  if (block_pos_ == 4) {
    block_ = philox4x32_10(counter_++, stream_, seed_);
    block_pos_ = 0;
  }
  return block_[block_pos_++];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian(double mean, double stddev) {
  if (stddev < 0.0) throw ValueError("gaussian: stddev must be >= 0");
  if (stddev == 0.0) return mean;
  if (have_spare_gauss_) {
    have_spare_gauss_ = false;
    return mean + stddev * spare_gauss_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double r = std::sqrt(-2.0 * std::log(s) / s);
  spare_gauss_ = v * r;
  have_spare_gauss_ = true;
  return mean + stddev * (u * r);
}

double Rng::gamma(double alpha) {
  // Marsaglia-Tsang; for alpha < 1 boost via gamma(alpha+1) * U^(1/alpha).
  if (alpha < 1.0) {
    const double u = uniform();
    return gamma(alpha + 1.0) * std::pow(u > 0.0 ? u : 1e-300, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = gaussian(0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double Rng::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValueError("beta: parameters must be > 0");
  if (a <= 1.0 && b <= 1.0) {
    // Johnk in log space: X = U^(1/a), Y = V^(1/b); accept when X + Y <= 1,
    // return X / (X + Y). Log space avoids underflow for tiny a, b.
    for (;;) {
      const double u = uniform();
      const double v = uniform();
      if (u == 0.0 || v == 0.0) continue;
      const double lx = std::log(u) / a;
      const double ly = std::log(v) / b;
      const double m = lx > ly ? lx : ly;
      const double lsum = m + std::log(std::exp(lx - m) + std::exp(ly - m));
      if (lsum <= 0.0) return std::exp(lx - lsum);
    }
  }
  const double ga = gamma(a);
  const double gb = gamma(b);
  const double s = ga + gb;
  return s > 0.0 ? ga / s : 0.5;
}

}  // namespace ugseg
