#pragma once

#include <cstdint>
#include <string_view>

namespace tsq {

uint64_t mix64(uint64_t x);  // splitmix64 finalizer, bijective

// Deterministic stream generator (splitmix64). One master seed per scenario;
// every subsystem pulls its own stream via derive(), so adding draws to one
// subsystem never perturbs another.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

  uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Unbiased integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n);

  // Uniform in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return real01() < p; }

  double normal(double mu, double sigma);

  // Child stream keyed by a label (and optional index); derived from the
  // original seed, independent of how much this stream has been consumed.
  Rng derive(std::string_view tag, uint64_t index = 0) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t state_;
};

}  // namespace tsq
