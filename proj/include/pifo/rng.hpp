#ifndef PIFO_RNG_HPP_
#define PIFO_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace pifo {

// Seeded generator with portable distribution transforms: the standard library
// distributions are implementation-defined, the mt19937_64 bit stream is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (one draw per call, no cached pair).
  double normal();

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Independent seed for a named purpose (e.g. "policy", "eval") under a root seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

}  // namespace pifo

#endif  // PIFO_RNG_HPP_
