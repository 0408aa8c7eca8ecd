#pragma once

#include <complex>
#include <cstdint>

namespace fsce {

// Combines seed material into a new 64-bit seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Deterministic generator with hand-rolled value transforms.  The standard
// distributions are implementation-defined, so uniform/normal draws are
// produced here directly to keep datasets bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  // inclusive bounds, unbiased
  int uniform_int(int lo, int hi);
  // standard normal via Box-Muller (two uniforms per draw)
  double normal();
  std::complex<double> complex_normal();  // CN(0, 1): variance 1/2 per part
  std::complex<double> qpsk_symbol();     // one of (+-1 +-j)/sqrt(2)

  // Independent stream derived from this generator's root seed; does not
  // consume state, so derived streams are order-independent.
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t root_;
  std::uint64_t state_[4];
};

}  // namespace fsce
