#include "graftnet/checkpoint.hpp"

#include "graftnet/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace graftnet {

namespace {

constexpr std::size_t kMagicSize = sizeof(kCheckpointMagic) - 1;

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw ParseError(std::string("checkpoint truncated while reading ") + what);
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= static_cast<UInt>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterSet& params) {
  if (params.size() > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("too many tensors");
  out.write(kCheckpointMagic, kMagicSize);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw ArgumentError("tensor name too long: " + p.name.substr(0, 32));
    if (p.value.rank() > std::numeric_limits<std::uint8_t>::max()) throw ArgumentError("tensor rank too large");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
    for (auto d : p.value.shape()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) throw ArgumentError("tensor extent too large");
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double v : p.value.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw IoError("checkpoint write failed");
}

ParameterSet read_checkpoint(std::istream& in) {
  std::array<char, kMagicSize> magic{};
  if (!in.read(magic.data(), magic.size()) || std::memcmp(magic.data(), kCheckpointMagic, kMagicSize) != 0)
    throw ParseError("not a GRAFTCKPT1 checkpoint (bad magic)");
  const auto count = get_le<std::uint32_t>(in, "tensor count");
  ParameterSet params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = get_le<std::uint16_t>(in, "name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw ParseError("checkpoint truncated in tensor name");
    const auto rank = get_le<std::uint8_t>(in, "rank");
    Shape shape(rank);
    for (auto& d : shape) {
      d = get_le<std::uint32_t>(in, "dimension");
      if (d == 0) throw ParseError("zero extent in tensor '" + name + "'");
    }
    Eigen::VectorXd data(static_cast<Eigen::Index>(shape_numel(shape)));
    for (Eigen::Index i = 0; i < data.size(); ++i)
      data[i] = std::bit_cast<double>(get_le<std::uint64_t>(in, "values"));
    params.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, params);
  out.flush();
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace graftnet
