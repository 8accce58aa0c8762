#include "semcom/rng.hpp"

#include <cmath>

#include "semcom/errors.hpp"

namespace semcom {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamLabel label, std::uint64_t salt)
    : seed_(seed), label_(label), salt_(salt) {
  std::uint64_t s = seed;
  s ^= 0xA5A5A5A5A5A5A5A5ULL * static_cast<std::uint64_t>(label);
  s ^= rotl(salt, 17) + 0x1D8AF066ULL;
  for (auto& word : state_) word = splitmix64(s);
}

RngStream RngStream::fork(std::uint64_t child_salt) const {
  // Mix parent salt and child salt; parent state is untouched.
  std::uint64_t mixed = salt_;
  mixed = mixed * 0x100000001B3ULL + child_salt + 1;
  return RngStream(seed_, label_, mixed);
}

std::uint64_t RngStream::next_u64() {
  // xoshiro256**
  std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw ContractError("uniform_index: n must be positive");
  std::uint64_t range = n;
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

}  // namespace semcom
