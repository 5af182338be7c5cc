#include "ugseg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>

#include "ugseg/errors.hpp"

namespace ugseg {
namespace {

constexpr char kMagic[4] = {'U', 'G', 'T', 'N'};

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save_checkpoint(const std::vector<NamedTensor>& tensors, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValueError("checkpoint: tensor name too long: " + t.name);
    }
    put_u16(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    if (t.value.rank() > 255) throw ValueError("checkpoint: rank too large");
    const char rank = static_cast<char>(t.value.rank());
    out.write(&rank, 1);
    for (std::int64_t e : t.value.shape) put_u64(out, static_cast<std::uint64_t>(e));
    for (float v : t.value.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw IoError("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(in);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint16_t name_len = get_u16(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    char rank_c = 0;
    in.read(&rank_c, 1);
    Shape shape;
    for (int r = 0; r < static_cast<unsigned char>(rank_c); ++r) {
      shape.push_back(static_cast<std::int64_t>(get_u64(in)));
    }
    if (!in) throw IoError("checkpoint: truncated header in " + path);
    Tensor<float> v = Tensor<float>::zeros(shape);
    for (auto& x : v.data) x = std::bit_cast<float>(get_u32(in));
    if (!in) throw IoError("checkpoint: truncated data in " + path);
    t.value = std::move(v);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

}  // namespace ugseg
