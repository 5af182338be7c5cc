#pragma once

#include <cstdint>

namespace ugseg {

/// Global call counters for the optional pipeline components. The training
/// loop is single-threaded by contract, so plain counters suffice; tests use
/// them to assert that disabled components are never invoked.
struct CallCounters {
  std::int64_t augment = 0;
  std::int64_t teacher_forward = 0;
  std::int64_t uncertainty_estimate = 0;
  std::int64_t kl_consistency = 0;
  std::int64_t ema_update = 0;

  void reset() { *this = CallCounters{}; }
};

inline CallCounters& counters() {
  static CallCounters c;
  return c;
}

}  // namespace ugseg
