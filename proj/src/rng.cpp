#include "rectflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace rectflow {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr double kTwoPow53 = 9007199254740992.0;

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t h = splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
  key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

PhiloxCounter CounterRng::block(std::uint64_t a, std::uint64_t b) const {
  return philox4x32({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                     static_cast<std::uint32_t>(b >> 32)},
                    key_);
}

std::array<double, 2> CounterRng::normal_pair(std::uint64_t a, std::uint64_t b) const {
  auto x = block(a, b);
  std::uint64_t w0 = ((static_cast<std::uint64_t>(x[0]) << 32) | x[1]) >> 11;
  std::uint64_t w1 = ((static_cast<std::uint64_t>(x[2]) << 32) | x[3]) >> 11;
  double u1 = (static_cast<double>(w0) + 1.0) / kTwoPow53;
  double u2 = static_cast<double>(w1) / kTwoPow53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double th = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

double CounterRng::uniform(std::uint64_t a, std::uint64_t b) const {
  auto x = block(a, b);
  std::uint64_t w = ((static_cast<std::uint64_t>(x[0]) << 32) | x[1]) >> 11;
  return static_cast<double>(w) / kTwoPow53;
}

void CounterRng::fill_normals(std::span<double> out, std::uint64_t a, std::uint32_t b) const {
  const std::uint64_t base = static_cast<std::uint64_t>(b) << 32;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    auto z = normal_pair(a, base | (i / 2));
    out[i] = z[0];
    if (i + 1 < out.size()) out[i + 1] = z[1];
  }
}

}  // namespace rectflow
