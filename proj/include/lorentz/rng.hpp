#pragma once

#include <array>
#include <cstdint>

namespace lorentz {

// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                               std::array<std::uint32_t, 2> k) {
  constexpr std::uint64_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kM0 * c[0], p1 = kM1 * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
  }
  return c;
}

// Counter-based stream keyed by a 64-bit seed and a three-word identifier.
// Two streams with different ids never share a counter block, so per-path
// and per-cell streams are independent without any shared state.
class Stream {
 public:
  Stream(std::uint64_t seed, std::array<std::uint32_t, 3> id);
  Stream(std::uint64_t seed, std::uint64_t id)
      : Stream(seed, {static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32), 0u}) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }
  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }
  // Uniform on the open interval (0, 1): 53 bits shifted by half an ulp.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  // Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double exponential(double mean);
  double normal();
  // Poisson by sequential inversion; fine for small means.
  unsigned poisson(double mean);
  std::uint64_t below(std::uint64_t n);

 private:
  void refill() {
    buf_ = philox4x32(ctr_, key_);
    ++ctr_[3];
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

// SplitMix64 finaliser (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Light counter-based stream: output k is splitmix64(key + k * golden).
// Used where many tiny streams are opened (one per Poisson cell).
class HashStream {
 public:
  explicit HashStream(std::uint64_t key) : key_(key) {}
  std::uint64_t next_u64() { return splitmix64(key_ + (++k_) * 0x9E3779B97F4A7C15ull); }
  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t k_ = 0;
};

}  // namespace lorentz
