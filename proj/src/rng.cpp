#include "cuqds/rng.hpp"

#include <cmath>
#include <numbers>

namespace cuqds::rng {

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream) {
  // FNV-1a over the stream name, then a splitmix64 finalizer mixing in the
  // master seed so nearby seeds do not yield correlated streams.
  std::uint64_t h = 14695981039346656037ull;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ull * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Stream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Stream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double Stream::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

std::size_t Stream::index(std::size_t n) {
  // Modulo bias is ~n / 2^64; n here is a handful of regimes.
  return static_cast<std::size_t>(engine_() % n);
}

}  // namespace cuqds::rng
