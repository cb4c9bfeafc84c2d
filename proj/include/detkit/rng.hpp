#pragma once

#include <cstdint>
#include <string_view>

namespace detkit {

// Deterministic xoshiro256++ generator. Everything downstream (splits,
// augmentation, synthesis) draws from this so runs are reproducible
// bit-for-bit across platforms, unlike std:: distributions whose output
// is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0,1) with 53 random bits.
  double uniform();
  // Uniform in [lo,hi).
  double uniform(double lo, double hi);
  // Unbiased index in [0,n); n must be >= 1.
  std::size_t uniform_index(std::size_t n);

  // Standard normal via Box-Muller (second value cached).
  double normal();
  // Marsaglia-Tsang gamma; alpha > 0, unit scale.
  double gamma(double alpha);
  // Beta(a,b) as gamma ratio.
  double beta(double a, double b);
  // Knuth's method; intended for small means.
  std::uint64_t poisson(double mean);

  // Independent child stream. Derivation mixes the label into the parent's
  // root seed, not its state, so streams do not depend on draw order.
  Rng stream(std::string_view label) const;
  Rng stream(std::uint64_t tag) const;

  template <typename T>
  void shuffle(T& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t root_seed_;
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace detkit
