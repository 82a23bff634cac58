#pragma once

#include <cstddef>
#include <cstdint>

namespace moco {

/// Counter-based pseudo-random stream.
///
/// The i-th raw output (i = 1, 2, ...) is the SplitMix64 finalizer applied to
/// `seed + i * 0x9E3779B97F4A7C15` (mod 2^64), so a stream is fully described by
/// its (seed, counter) pair:
///
///   z = seed + counter * 0x9E3779B97F4A7C15
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   out = z ^ (z >> 31)
///
/// Uniform doubles take the top 53 bits: (out >> 11) * 2^-53, in [0, 1).
/// Standard normals use the Box-Muller transform on two uniforms
/// u1 = ((out1 >> 11) + 0.5) * 2^-53 and u2 = (out2 >> 11) * 2^-53, returning
/// sqrt(-2 ln u1) cos(2 pi u2) and caching sqrt(-2 ln u1) sin(2 pi u2) for the
/// next call.
///
/// A stream must have a single owner; use substream() to hand out independent
/// streams instead of sharing one.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double normal();
  /// Uniform integer in [0, n) by rejection sampling; n must be >= 1.
  std::size_t below(std::size_t n);

  /// Independent stream keyed by `tag`. Does not advance this stream.
  RngStream substream(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace moco
