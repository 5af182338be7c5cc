#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ugseg/tensor.hpp"

namespace ugseg {

/// HxW plane of {0,1}.
struct BinaryMask {
  std::int64_t h = 0;
  std::int64_t w = 0;
  std::vector<std::uint8_t> v;  // row-major

  std::uint8_t at(std::int64_t y, std::int64_t x) const {
    return v[static_cast<std::size_t>(y * w + x)];
  }
};

/// Foreground pixels with at least one background 4-neighbor; off-grid
/// counts as background. Row-major order.
std::vector<std::pair<std::int64_t, std::int64_t>> boundary(const BinaryMask& m);

/// Dice similarity 2|P ^ G| / (|P| + |G|); both masks empty -> 1.0.
double dsc(const BinaryMask& pred, const BinaryMask& gt);

/// Symmetric average surface distance between the two boundaries (Euclidean
/// pixel units, exact exhaustive nearest neighbor). Empty masks have no
/// boundary: nullopt, to be excluded from averages with a warning count.
std::optional<double> asd(const BinaryMask& pred, const BinaryMask& gt);

/// pixel >= threshold -> 1. Accepts [H,W], [1,H,W] or [1,1,H,W].
template <typename T>
BinaryMask binarize(const Tensor<T>& p, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValueError("binarize: threshold must be in (0,1)");
  }
  Shape s = p.shape;
  while (s.size() > 2 && s.front() == 1) s.erase(s.begin());
  if (s.size() != 2) {
    throw ShapeError("binarize: expected a single HxW plane, got " + shape_str(p.shape));
  }
  BinaryMask m;
  m.h = s[0];
  m.w = s[1];
  m.v.resize(static_cast<std::size_t>(m.h * m.w));
  for (std::int64_t i = 0; i < p.numel(); ++i) {
    m.v[static_cast<std::size_t>(i)] =
        static_cast<double>(p[i]) >= threshold ? 1 : 0;
  }
  return m;
}

}  // namespace ugseg
