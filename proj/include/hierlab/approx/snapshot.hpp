#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hierlab::approx {

// Parameter snapshot layout (all little-endian):
//   bytes 0..3   magic "HLPS"
//   bytes 4..7   uint32 format version
//   bytes 8..15  uint64 parameter count
//   then count float64 values
inline constexpr std::array<char, 4> kSnapshotMagic{'H', 'L', 'P', 'S'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw std::runtime_error("snapshot: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const Eigen::VectorXd& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("snapshot: cannot open " + path + " for writing");
  os.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  detail::put_le<std::uint32_t>(os, kSnapshotVersion);
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) detail::put_le<double>(os, params[i]);
  if (!os) throw std::runtime_error("snapshot: write failed for " + path);
}

inline Eigen::VectorXd read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open " + path);
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kSnapshotMagic)
    throw std::runtime_error("snapshot: bad magic in " + path);
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw std::runtime_error("snapshot: unsupported version in " + path);
  const auto count = detail::get_le<std::uint64_t>(is);
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = detail::get_le<double>(is);
  return params;
}

}  // namespace hierlab::approx
