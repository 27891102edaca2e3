#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hierlab {

// splitmix64 finalizer; used to whiten seeds before they reach the engine.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the named substream of a master seed. Streams are keyed by name,
/// so adding a new consumer never shifts the draws of an existing one.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(master ^ mix64(h));
}

class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}
  Rng(std::uint64_t master, std::string_view stream) : engine_(derive_seed(master, stream)) {}

  Rng substream(std::string_view stream) { return Rng(engine_(), stream); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hierlab
