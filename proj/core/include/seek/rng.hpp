#pragma once

#include <cstdint>
#include <random>

namespace seek {

// Seeded RNG with a fixed uniform mapping so that two runs of the same
// binary (and the same seed) produce bitwise-identical parameter streams.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform double in [0, 1)
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // integer in [0, n)
    std::uint64_t index(std::uint64_t n) { return gen_() % n; }

    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

} // namespace seek
