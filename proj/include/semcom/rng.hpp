#ifndef SEMCOM_RNG_HPP
#define SEMCOM_RNG_HPP

#include <cstdint>
#include <cstddef>
#include <vector>

namespace semcom {

// Stream labels keep the independent random consumers of a run (parameter
// init, mask sampling, channel noise, attack, data shuffling) from sharing
// state, so adding draws to one consumer never shifts another.
enum class StreamLabel : std::uint64_t {
  init = 1,
  mask = 2,
  channel = 3,
  attack = 4,
  data = 5,
};

// Deterministic counter-seeded generator (xoshiro256** seeded via splitmix64).
// The same (seed, label, salt) triple always produces the same draw sequence.
// All distributions are implemented on top of raw 64-bit draws, so sequences
// are fixed by this code alone, not by the standard library.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamLabel label, std::uint64_t salt = 0);

  std::uint64_t seed() const { return seed_; }
  StreamLabel label() const { return label_; }

  // Child stream derived from (seed, label, salt, child_salt) without
  // consuming this stream's state. Safe for per-sample / per-sweep-point use.
  RngStream fork(std::uint64_t child_salt) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal();

  // Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = uniform_index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  StreamLabel label_;
  std::uint64_t salt_;
  std::uint64_t state_[4];
};

}  // namespace semcom

#endif  // SEMCOM_RNG_HPP
