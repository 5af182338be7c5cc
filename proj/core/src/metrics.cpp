#include "ugseg/metrics.hpp"

#include <cmath>
#include <limits>

#include "ugseg/errors.hpp"

namespace ugseg {
namespace {

void require_same_extents(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.h != b.h || a.w != b.w) {
    throw ShapeError(std::string(what) + ": mask extents differ");
  }
}

double mean_min_distance(const std::vector<std::pair<std::int64_t, std::int64_t>>& from,
                         const std::vector<std::pair<std::int64_t, std::int64_t>>& to,
                         double& sum_out) {
  sum_out = 0.0;
  for (const auto& [ay, ax] : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [by, bx] : to) {
      const double dy = static_cast<double>(ay - by);
      const double dx = static_cast<double>(ax - bx);
      const double d2 = dy * dy + dx * dx;
      if (d2 < best) best = d2;
    }
    sum_out += std::sqrt(best);
  }
  return sum_out;
}

}  // namespace

std::vector<std::pair<std::int64_t, std::int64_t>> boundary(const BinaryMask& m) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::int64_t y = 0; y < m.h; ++y) {
    for (std::int64_t x = 0; x < m.w; ++x) {
      if (!m.at(y, x)) continue;
      const bool edge = y == 0 || !m.at(y - 1, x) || y == m.h - 1 || !m.at(y + 1, x) ||
                        x == 0 || !m.at(y, x - 1) || x == m.w - 1 || !m.at(y, x + 1);
      if (edge) out.emplace_back(y, x);
    }
  }
  return out;
}

double dsc(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_extents(pred, gt, "dsc");
  std::int64_t inter = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    np += pred.v[i];
    ng += gt.v[i];
    inter += pred.v[i] & gt.v[i];
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + ng);
}

std::optional<double> asd(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_extents(pred, gt, "asd");
  const auto bp = boundary(pred);
  const auto bg = boundary(gt);
  if (bp.empty() || bg.empty()) return std::nullopt;
  double s1 = 0.0, s2 = 0.0;
  mean_min_distance(bp, bg, s1);
  mean_min_distance(bg, bp, s2);
  return (s1 + s2) / static_cast<double>(bp.size() + bg.size());
}

}  // namespace ugseg
