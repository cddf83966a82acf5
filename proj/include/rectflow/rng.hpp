#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace rectflow {

// Philox4x32-10 (Salmon et al., SC'11), the counter-based generator of Random123.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);

// A keyed stream. Every draw is addressed by two 64-bit words, so the same (seed, stream,
// address) gives the same numbers regardless of call order or thread.
//
// Gaussians: Box-Muller on one Philox block. u1 = (top 53 bits of words 0,1 + 1) 2^-53 in (0,1],
// u2 = (top 53 bits of words 2,3) 2^-53 in [0,1); z0 = r cos(2 pi u2), z1 = r sin(2 pi u2),
// r = sqrt(-2 ln u1).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  PhiloxCounter block(std::uint64_t a, std::uint64_t b) const;
  std::array<double, 2> normal_pair(std::uint64_t a, std::uint64_t b) const;
  double uniform(std::uint64_t a, std::uint64_t b) const;  // [0,1)

  // out[i] uses the pair at address (a, (b << 32) | i/2).
  void fill_normals(std::span<double> out, std::uint64_t a, std::uint32_t b) const;

  const PhiloxKey& key() const { return key_; }

 private:
  PhiloxKey key_;
};

}  // namespace rectflow
