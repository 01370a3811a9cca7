#pragma once
#include <cstdint>
#include <cmath>

namespace cosifl {

// Deterministic RNG with cheap substream derivation.
//
// Everything random in a run is drawn from streams derived off the single
// scenario seed, keyed by (purpose, a, b) — e.g. (kTrain, client_id, round).
// That makes any client-round reproducible in isolation and keeps unrelated
// features (attack selection, rejoin draws, audits) from perturbing each
// other's streams when toggled.
//
// Generator: xoshiro256** with SplitMix64 state expansion. Hand-rolled rather
// than <random> engines/distributions because libstdc++'s distributions are
// implementation-defined; this keeps trajectories bit-stable everywhere.

namespace stream {
// Purpose tags for substream derivation. Values are part of the determinism
// contract: renumbering them changes every trajectory.
enum Purpose : std::uint64_t {
  kDataGen = 1,
  kHoldout = 2,
  kPartition = 3,
  kLambdaProbe = 4,
  kTrain = 5,
  kMaliciousPick = 6,
  kRejoin = 7,
  kAuditSample = 8,
  kAuditModel = 9,
  kThetaCal = 10,
  kSplit = 11,
};
}  // namespace stream

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  Rng() : Rng(0, 0, 0, 0) {}

  Rng(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0,
      std::uint64_t b = 0) {
    // Chain the key words through SplitMix64 so nearby keys land far apart.
    std::uint64_t x = seed;
    (void)splitmix64(x);
    x ^= purpose * 0xd6e8feb86659fd93ULL;
    (void)splitmix64(x);
    x ^= a * 0xa0761d6478bd642fULL;
    (void)splitmix64(x);
    x ^= b * 0xe7037ed1a0b428dbULL;
    for (auto& w : s_) w = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, bound) via rejection.
  std::uint64_t uniform_u64(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box–Muller. The sine mate is discarded; two uniforms
  // per draw keeps the stream layout independent of call parity.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1] so the log is finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

}  // namespace cosifl
