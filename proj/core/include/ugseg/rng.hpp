#pragma once

#include <array>
#include <cstdint>

namespace ugseg {

/// Counter-based deterministic random generator (Philox4x32-10).
///
/// A generator is identified by (seed, stream). Identical (seed, stream,
/// call sequence) reproduces the identical output sequence on every run;
/// generation never touches global state, so pre-forked substreams can be
/// consumed concurrently without affecting each other.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  /// Derives an independent substream. fork(a).fork(b) != fork(b).fork(a).
  Rng fork(std::uint64_t label) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform();

  /// Gaussian draw via the polar method; stddev >= 0.
  double gaussian(double mean, double stddev);

  /// Beta(a, b) draw in [0, 1]; a, b > 0. Uses Johnk's algorithm in log
  /// space when both parameters are <= 1, the gamma-ratio construction
  /// otherwise.
  double beta(double a, double b);

 private:
  double gamma(double alpha);

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;  // 4 => block exhausted
  bool have_spare_gauss_ = false;
  double spare_gauss_ = 0.0;
};

/// 64-bit mixing finalizer (splitmix64); used for substream derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ugseg
