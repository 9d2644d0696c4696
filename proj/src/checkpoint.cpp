#include "regae/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace regae {

namespace {

constexpr std::array<char, 8> kMagic{'R', 'E', 'G', 'A', 'E', 'C', 'K', 'P'};
constexpr std::uint64_t kMaxReasonableSize = std::uint64_t{1} << 34;

template <class UInt>
void write_le(std::ostream& out, UInt v) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <class UInt>
UInt read_le(std::istream& in) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint: unexpected end of file");
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(bytes[i]) << (8 * i);
  return v;
}

std::string read_string(std::istream& in, std::uint64_t length) {
  if (length > kMaxReasonableSize) throw DataError("checkpoint: corrupt string length");
  std::string s(length, '\0');
  in.read(s.data(), static_cast<std::streamsize>(length));
  if (!in) throw DataError("checkpoint: unexpected end of file");
  return s;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f32(std::ostream& out, Real v) { write_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
Real read_f32(std::istream& in) { return static_cast<Real>(std::bit_cast<float>(read_le<std::uint32_t>(in))); }

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params, const std::string& config_snapshot) {
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, kCheckpointVersion);
  write_u64(out, config_snapshot.size());
  out.write(config_snapshot.data(), static_cast<std::streamsize>(config_snapshot.size()));
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    write_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u32(out, static_cast<std::uint32_t>(p->tensor.shape.size()));
    for (std::size_t d : p->tensor.shape) write_u64(out, d);
    write_u64(out, p->step);
    const std::size_t n = p->tensor.size();
    for (Real v : p->tensor.values) write_f32(out, v);
    for (std::size_t i = 0; i < n; ++i) write_f32(out, i < p->first_moment.size() ? p->first_moment[i] : Real(0));
    for (std::size_t i = 0; i < n; ++i) write_f32(out, i < p->second_moment.size() ? p->second_moment[i] : Real(0));
  }
}

CheckpointData read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("checkpoint: bad magic");
  const std::uint32_t version = read_u32(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  CheckpointData data;
  data.config_snapshot = read_string(in, read_u64(in));
  const std::uint32_t count = read_u32(in);
  data.parameters.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = read_string(in, read_u32(in));
    const std::uint32_t rank = read_u32(in);
    if (rank > 8) throw DataError("checkpoint: corrupt rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = read_u64(in);
    const std::size_t n = shape_size(shape);
    if (n > kMaxReasonableSize) throw DataError("checkpoint: corrupt shape for " + name);
    const std::uint64_t step = read_u64(in);
    std::vector<Real> values(n);
    for (auto& v : values) v = read_f32(in);
    Parameter p(std::move(name), Tensor(std::move(shape), std::move(values)));
    for (auto& v : p.first_moment) v = read_f32(in);
    for (auto& v : p.second_moment) v = read_f32(in);
    p.step = step;
    data.parameters.push_back(std::move(p));
  }
  return data;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params,
                     const std::string& config_snapshot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_checkpoint(out, params, config_snapshot);
  if (!out) throw DataError("write failed: " + path.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file: " + path.string());
  return read_checkpoint(in);
}

}  // namespace regae
