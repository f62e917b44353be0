#ifndef DABS_RNG_HPP_
#define DABS_RNG_HPP_

#include <cstdint>
#include <initializer_list>

namespace dabs {

/* Counter-based generator: every value is a pure function of (key, counter),
 * so draws are reproducible regardless of evaluation order or thread count.
 * The key is derived by folding a seed and a list of stream ids through the
 * splitmix64 finalizer; the output sequence is splitmix64 over the counter. */
class CounterRng {
 public:
  CounterRng(uint64_t seed, std::initializer_list<uint64_t> stream) : key_(seed) {
    for (uint64_t id : stream) key_ = mix(key_ + GOLDEN + id * 0x9E3779B97F4A7C15ull);
  }

  uint64_t next() { return mix(key_ + (++counter_) * GOLDEN); }

  /* uniform in [0,1) with 53 random bits */
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  static constexpr uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;

  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace dabs

#endif
