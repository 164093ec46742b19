#pragma once

// Binary field snapshots: a 64-byte header followed by n*n little-endian
// f64 samples in row-major order.
//
//   bytes  0..7   magic "SQGFLD1\0"
//   bytes  8..15  u64 n
//   bytes 16..23  f64 d (spatial period)
//   bytes 24..31  f64 t (time)
//   bytes 32..63  reserved, zero

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "sqg/errors.hpp"
#include "sqg/torus_spectral.hpp"

namespace sqg {

inline constexpr std::array<char, 8> kSnapshotMagic{'S', 'Q', 'G', 'F', 'L', 'D', '1', '\0'};
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

struct Snapshot {
  ScalarField field;
  double t = 0.0;
};

namespace detail {

template <class T>
void put_le(unsigned char* dst, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<unsigned char>(bits >> (8 * i));
}

template <class T>
T get_le(const unsigned char* src) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace detail

inline std::string encode_snapshot(const ScalarField& field, double t) {
  const auto& g = field.geometry();
  std::string out(kSnapshotHeaderBytes + 8 * g.size(), '\0');
  auto* p = reinterpret_cast<unsigned char*>(out.data());
  std::memcpy(p, kSnapshotMagic.data(), kSnapshotMagic.size());
  detail::put_le<std::uint64_t>(p + 8, g.n);
  detail::put_le<double>(p + 16, g.d);
  detail::put_le<double>(p + 24, t);
  p += kSnapshotHeaderBytes;
  for (double v : field.values()) {
    detail::put_le<double>(p, v);
    p += 8;
  }
  return out;
}

inline Snapshot decode_snapshot(std::string_view bytes) {
  if (bytes.size() < kSnapshotHeaderBytes) throw InputError("snapshot shorter than its header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kSnapshotMagic.data(), kSnapshotMagic.size()) != 0)
    throw InputError("snapshot magic mismatch");
  const auto n = detail::get_le<std::uint64_t>(p + 8);
  const auto d = detail::get_le<double>(p + 16);
  const auto t = detail::get_le<double>(p + 24);
  const auto g = TorusGeometry::make(static_cast<std::size_t>(n), d);
  if (bytes.size() != kSnapshotHeaderBytes + 8 * g.size())
    throw InputError("snapshot payload size does not match n = " + std::to_string(n));
  RealBuffer values(g.size());
  p += kSnapshotHeaderBytes;
  for (auto& v : values) {
    v = detail::get_le<double>(p);
    p += 8;
  }
  return {ScalarField(g, std::move(values)), t};
}

inline void write_snapshot(const std::filesystem::path& path, const ScalarField& field, double t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto bytes = encode_snapshot(field, t);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open snapshot " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace sqg
