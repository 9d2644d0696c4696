#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "regae/tensor.hpp"

namespace regae {

// Binary layout (all integers and floats little-endian):
//   "REGAECKP"  u32 version
//   u64 config length, config bytes (JSON snapshot)
//   u32 parameter count, then per parameter:
//     u32 name length, name bytes, u32 rank, u64 dims[rank], u64 adam step,
//     f32 values[size], f32 first_moment[size], f32 second_moment[size]
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  std::string config_snapshot;
  std::vector<Parameter> parameters;
};

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params, const std::string& config_snapshot);
CheckpointData read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params,
                     const std::string& config_snapshot);
CheckpointData load_checkpoint(const std::filesystem::path& path);

// Little-endian float32 helpers shared with the embedding file format.
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, Real v);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
Real read_f32(std::istream& in);

}  // namespace regae
