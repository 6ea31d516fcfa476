#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "sal/error.hpp"
#include "sal/parameter_set.hpp"

namespace sal::io {

// Binary layout, all integers little-endian:
//   "SALCKPT1"                 8 bytes magic
//   u32 format version         (= 1)
//   u64 entry count
//   per entry:
//     u32 name length, name bytes (UTF-8, no terminator)
//     u8  flags                bit 0 = trainable
//     u32 rank, u64 dims[rank]
//     f64 values[prod(dims)]   IEEE-754 binary64
inline constexpr std::array<char, 8> kCheckpointMagic{'S', 'A', 'L', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>(bits & 0xFFU));
    bits = static_cast<U>(bits >> 8U);
  }
}

template <class T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("checkpoint: unexpected end of file");
    bits |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(c)) << (8U * i));
  }
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const ParameterSet& params) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint64_t>(out, params.size());
  for (const auto& e : params) {
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::write_le<std::uint8_t>(out, e.trainable ? 1U : 0U);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.shape.size()));
    for (auto d : e.tensor.shape) detail::write_le<std::uint64_t>(out, d);
    for (double v : e.tensor.values) detail::write_le<double>(out, v);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

inline ParameterSet read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) throw IoError("checkpoint: bad magic bytes");
  const auto version = detail::read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto count = detail::read_le<std::uint64_t>(in);
  ParameterSet params;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_le<std::uint32_t>(in);
    if (name_len > (1U << 20)) throw IoError("checkpoint: implausible name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("checkpoint: truncated entry name");
    const auto flags = detail::read_le<std::uint8_t>(in);
    const auto rank = detail::read_le<std::uint32_t>(in);
    if (rank > 16) throw IoError("checkpoint: implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = detail::read_le<std::uint64_t>(in);
    const std::size_t n = shape_size(shape);
    if (n > (std::size_t{1} << 34)) throw IoError("checkpoint: implausible tensor size");
    std::vector<double> values(n);
    for (double& v : values) v = detail::read_le<double>(in);
    params.add(std::move(name), Tensor(std::move(shape), std::move(values)), (flags & 1U) != 0);
  }
  return params;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, params);
}

inline ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace sal::io
