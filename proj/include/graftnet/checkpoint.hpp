#pragma once

#include "graftnet/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace graftnet {

/// GRAFTCKPT1 container. Layout, all integers little-endian:
///   "GRAFTCKPT1" | u32 count | count x { u16 name_len | name (UTF-8) |
///   u8 rank | rank x u32 dim | prod(dims) x f64 }
inline constexpr char kCheckpointMagic[] = "GRAFTCKPT1";

void write_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& path);

}  // namespace graftnet
