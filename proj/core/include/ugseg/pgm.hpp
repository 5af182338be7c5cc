#pragma once

#include <string>

#include "ugseg/tensor.hpp"

namespace ugseg {

/// Value range declared when writing a tensor as 8-bit gray.
enum class PgmRange { kMinusOneOne, kZeroOne };

/// Reads a binary (P5) 8-bit PGM and maps bytes [0,255] linearly to
/// [-1,1]. Result shape is [1,H,W].
Tensor<double> load_pgm(const std::string& path);

/// Writes a [H,W] or [1,H,W] tensor as binary PGM, mapping the declared
/// range linearly onto [0,255] with round-half-to-even; values outside the
/// range are clipped.
void save_pgm(const Tensor<double>& t, const std::string& path,
              PgmRange range = PgmRange::kMinusOneOne);

template <typename T>
void save_pgm(const Tensor<T>& t, const std::string& path,
              PgmRange range = PgmRange::kMinusOneOne) {
  save_pgm(t.template cast<double>(), path, range);
}

}  // namespace ugseg
