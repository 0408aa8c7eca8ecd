#include "fsce/core/rng.hpp"

#include <cmath>
#include <numbers>

namespace fsce {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ rotl(b, 17) ^ 0xd1b54a32d192ed03ULL;
  std::uint64_t m = splitmix64(x);
  return m ^ splitmix64(x);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

Rng::Rng(std::uint64_t seed) : root_(seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

// xoshiro256++
std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t reject_below = (0 - range) % range;  // 2^64 mod range
  std::uint64_t v = next_u64();
  while (v < reject_below) v = next_u64();
  return lo + static_cast<int>(v % range);
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> Rng::complex_normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1));  // so |z|^2 has mean 1
  return {r * std::cos(2.0 * std::numbers::pi * u2),
          r * std::sin(2.0 * std::numbers::pi * u2)};
}

std::complex<double> Rng::qpsk_symbol() {
  static constexpr double kInvSqrt2 = 0.7071067811865475244;
  const int q = uniform_int(0, 3);
  const double re = (q & 1) ? -kInvSqrt2 : kInvSqrt2;
  const double im = (q & 2) ? -kInvSqrt2 : kInvSqrt2;
  return {re, im};
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix_seed(root_, stream));
}

}  // namespace fsce
