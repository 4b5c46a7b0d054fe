#pragma once
#include <cstdint>

namespace dpkz {

// 64-bit finalizer from MurmurHash3 (fmix64). Bijective, full avalanche.
inline uint64_t fmix64(uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Absorb one 64-bit key into a running hash. Chaining fmix64 keeps the state
// fully mixed after every coordinate, so prefixes over (t, x1, .., xk) can be
// reused along a row while only the last coordinate varies.
inline uint64_t hash_chain(uint64_t h, uint64_t key) { return fmix64(h ^ key); }

// signed lattice coordinate -> unsigned key without collisions
inline uint64_t zigzag64(int64_t v) {
  return (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63);
}

// top 53 bits -> uniform double in the open interval (0,1); never 0 or 1,
// so it is always a valid quantile argument
inline double to_unit_open(uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;
}

// xoshiro256++ for the sequential walk samplers (the noise field uses the
// counter hash above instead, so field access order never matters)
struct Xoshiro256pp {
  uint64_t s[4];

  explicit Xoshiro256pp(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& w : s) w = splitmix64(sm);
  }

  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t next() {
    const uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // draw in [0,n) via 128-bit multiply; bias is 2^-64, irrelevant here
  uint32_t below(uint32_t n) {
    return static_cast<uint32_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }
};

// Deterministic seed for (stream, replicate) pairs under one base seed.
// Streams are small named constants so manifests can state the derivation.
inline uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t replicate) {
  return hash_chain(hash_chain(base ^ 0x5dc1a8f2d3b9e677ULL, stream), replicate);
}

}  // namespace dpkz
