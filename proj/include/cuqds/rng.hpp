#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cuqds::rng {

// Child seed for a named stream, so that e.g. data generation and any future
// randomized stage never share draws from the master seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream);

// mt19937_64 plus explicit uniform/normal transforms. The standard pins the
// engine's output sequence; std::*_distribution algorithms are
// implementation-defined, which would break replay equality across toolchains.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();   // standard normal, Box-Muller
  double normal(double mean, double stddev);
  std::size_t index(std::size_t n);  // [0, n)

 private:
  std::mt19937_64 engine_;
};

}  // namespace cuqds::rng
