#pragma once

#include <cstdint>
#include <vector>

namespace pes {

// Deterministic xoshiro256** generator seeded via splitmix64.
// The integer stream depends only on the seed and the call sequence,
// never on platform library state.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform double in [0, 1), 53-bit resolution.
  double next_double();

  // Uniform double in (0, 1]; safe as a log() argument.
  double next_double_open();

  // Standard normal via Box-Muller (second value cached).
  double next_normal();

  // Uniform integer in [0, n) by rejection; n must be positive.
  std::size_t next_below(std::size_t n);

  // Independent generator derived from (seed, stream); used to hand
  // substreams to parallel or per-example work.
  SeededRng split(std::uint64_t stream) const;

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable combination of a base seed and a stream tag.
std::uint64_t mix_seeds(std::uint64_t base, std::uint64_t stream);

// Fisher-Yates shuffle driven by a SeededRng.
template <typename T>
void shuffle(std::vector<T>& values, SeededRng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = rng.next_below(i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace pes
