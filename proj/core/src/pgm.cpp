#include "ugseg/pgm.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "ugseg/errors.hpp"

namespace ugseg {
namespace {

/// Reads the next whitespace-separated token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') {
        tok.push_back(static_cast<char>(in.get()));
      }
      return tok;
    }
  }
  throw IoError("pgm: truncated header");
}

std::int64_t parse_extent(const std::string& tok, const char* what) {
  std::int64_t v = 0;
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      throw IoError(std::string("pgm: malformed ") + what);
    }
    v = v * 10 + (ch - '0');
    if (v > (1 << 20)) throw IoError(std::string("pgm: implausible ") + what);
  }
  return v;
}

}  // namespace

Tensor<double> load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("pgm: cannot open " + path);
  if (next_token(in) != "P5") throw IoError("pgm: not a binary PGM (P5): " + path);
  const std::int64_t w = parse_extent(next_token(in), "width");
  const std::int64_t h = parse_extent(next_token(in), "height");
  const std::int64_t maxval = parse_extent(next_token(in), "maxval");
  if (w <= 0 || h <= 0) throw IoError("pgm: empty image: " + path);
  if (maxval != 255) throw IoError("pgm: unsupported maxval (want 255): " + path);
  // Exactly one whitespace byte separates the header from the raster.
  in.get();
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w * h));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError("pgm: truncated raster: " + path);
  }
  Tensor<double> t = Tensor<double>::zeros({1, h, w});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    t[static_cast<std::int64_t>(i)] = -1.0 + 2.0 * static_cast<double>(raw[i]) / 255.0;
  }
  return t;
}

void save_pgm(const Tensor<double>& t, const std::string& path, PgmRange range) {
  std::int64_t h = 0, w = 0;
  if (t.rank() == 2) {
    h = t.shape[0];
    w = t.shape[1];
  } else if (t.rank() == 3 && t.shape[0] == 1) {
    h = t.shape[1];
    w = t.shape[2];
  } else {
    throw ShapeError("save_pgm: expected HxW or 1xHxW, got " + shape_str(t.shape));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pgm: cannot write " + path);
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(h * w));
  const double lo = range == PgmRange::kMinusOneOne ? -1.0 : 0.0;
  const double span = range == PgmRange::kMinusOneOne ? 2.0 : 1.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double unit = (t[static_cast<std::int64_t>(i)] - lo) / span;
    // nearbyint under the default FE_TONEAREST mode rounds ties to even.
    double q = std::nearbyint(unit * 255.0);
    q = std::min(255.0, std::max(0.0, q));
    raw[i] = static_cast<std::uint8_t>(q);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("pgm: write failed: " + path);
}

}  // namespace ugseg
