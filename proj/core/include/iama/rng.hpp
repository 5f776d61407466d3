#ifndef IAMA_RNG_HPP_
#define IAMA_RNG_HPP_

#include <cstdint>
#include <random>

namespace iama {

// Seeded generator used everywhere randomness is needed. The engine is
// std::mt19937_64 (fully specified by the standard); the uniform draw is
// built from its raw 64-bit output so results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; mixes a base seed with stream/trial identifiers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

}  // namespace iama

#endif  // IAMA_RNG_HPP_
