#pragma once

#include <cstdint>

namespace augsearch {

// Deterministic 64-bit PRNG (splitmix64). We own the generator and the
// distributions so that draw sequences are identical across standard-library
// implementations; <random> engines are specified but the distributions are
// not.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Lemire multiply-shift; bias < n / 2^64.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // +1 or -1 with equal probability.
  int sign() { return (next_u64() >> 63) ? -1 : +1; }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

// Finalizer of splitmix64, used as the mixing function for stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream identifiers. Every random stream in a run is derived from the single
// top-level seed plus one of these tags (and optional indices), so results do
// not depend on scheduling or worker count.
enum class StreamId : std::uint64_t {
  kModelInit = 1,
  kSplit = 2,
  kSchedule = 3,
  kTrajectory = 4,
  kPreproc = 5,
  kValSubsample = 6,
  kSynthetic = 7,
};

inline std::uint64_t derive_seed(std::uint64_t run_seed, StreamId id,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = mix64(run_seed ^ 0x6a09e667f3bcc909ULL);
  s = mix64(s ^ static_cast<std::uint64_t>(id));
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  return s;
}

// FNV-1a, used for batch-schedule checksums and config hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace augsearch
