#pragma once

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace too {

/// Engine used everywhere randomness is needed. Campaigns, fits and tests
/// derive child streams via substream() so results are reproducible and
/// independent of scheduling.
using Rng = std::mt19937_64;

/// Thrown when a covariance factorization or posterior sampling fails.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic child stream derived from a master seed and an index.
inline Rng substream(std::uint64_t master, std::uint64_t index) {
  return Rng(splitmix64(master ^ splitmix64(index + 0x51ed270b)));
}

/// Uniform double in [0, 1) consuming exactly one engine draw.
inline double canonical(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Shortest decimal form that round-trips the exact double value. Keeps
/// emitted CSV/JSON byte-stable across reruns.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace too
