#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdde {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A draw is a pure function of (key, counter), so any path and step can be
// regenerated independently of evaluation order.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Standard normal draws addressed by (seed, stream, step, slot).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  // Two independent N(0,1) values for block `block` of (stream, step).
  std::array<double, 2> pair(std::uint64_t stream, std::uint32_t step, std::uint32_t block) const {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(stream),
                                  static_cast<std::uint32_t>(stream >> 32), step, block};
    const auto r = Philox4x32::generate(ctr, key_);
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  double normal(std::uint64_t stream, std::uint32_t step, std::uint32_t slot) const {
    return pair(stream, step, slot / 2)[slot % 2];
  }

  // Uniform on (0,1) from the same counter space, on a disjoint block range.
  double uniform(std::uint64_t stream, std::uint32_t step, std::uint32_t slot) const {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(stream),
                                  static_cast<std::uint32_t>(stream >> 32), step,
                                  0x80000000u | slot};
    const auto r = Philox4x32::generate(ctr, key_);
    return to_open_unit(r[0], r[1]);
  }

 private:
  // 53-bit mantissa, shifted half an ulp so the result is never 0.
  static double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
  }

  Philox4x32::Key key_;
};

}  // namespace sdde
