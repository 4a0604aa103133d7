#ifndef HAZARDTAG_PRNG_HPP
#define HAZARDTAG_PRNG_HPP

#include <cstdint>
#include <cstddef>
#include <vector>

namespace hazardtag {

// Shared deterministic PRNG used for corpus splitting, parameter init and
// training shuffles. 64-bit linear congruential generator with the MMIX
// constants (Knuth):
//   state <- state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
// Doubles are taken from the top 53 bits, so every implementation of this
// recurrence reproduces the same splits and the same initial models.
class Lcg64 {
 public:
  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) {
    auto k = static_cast<std::size_t>(next_double() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  // Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace hazardtag

#endif  // HAZARDTAG_PRNG_HPP
