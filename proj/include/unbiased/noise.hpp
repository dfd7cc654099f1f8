#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace unbiased {

/// Philox4x32-10 counter-based generator. Each stream is named by
/// (seed, sample index, factor); streams never share state, so any sample
/// can be regenerated in isolation regardless of execution order.
class PhiloxStream {
 public:
  using result_type = std::uint64_t;

  PhiloxStream(std::uint64_t seed, std::uint64_t sample, std::uint64_t factor)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        counter_{0, static_cast<std::uint32_t>(factor),
                 static_cast<std::uint32_t>(sample),
                 static_cast<std::uint32_t>(sample >> 32)} {
    // fold the high factor bits into the key so 64-bit factors stay distinct
    key_[0] ^= static_cast<std::uint32_t>(factor >> 32);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (index_ == 4) {
      block_ = round10(counter_, key_);
      advance();
      index_ = 0;
    }
    const std::uint64_t lo = block_[index_];
    const std::uint64_t hi = block_[index_ + 1];
    index_ += 2;
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::array<std::uint32_t, 4> round10(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  void advance() {
    if (++counter_[0] == 0) ++counter_[1];
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int index_ = 4;
};

/// Standard normal draw (Box-Muller, one value per call; spare cached).
class NormalSampler {
 public:
  explicit NormalSampler(PhiloxStream& stream) : stream_(stream) {}

  double operator()() { return dist_(stream_); }

 private:
  PhiloxStream& stream_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Aggregate adjacent pairs of fine Brownian increments into coarse ones:
/// out[j] = fine[2j] + fine[2j+1].
inline std::vector<double> coarsen_increments(std::span<const double> fine) {
  if (fine.size() < 2 || fine.size() % 2 != 0) {
    throw std::invalid_argument("coarsen_increments: length must be even and >= 2");
  }
  std::vector<double> coarse(fine.size() / 2);
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    coarse[j] = fine[2 * j] + fine[2 * j + 1];
  }
  return coarse;
}

/// Fine Brownian increments for one ladder realization: one vector of 2^level
/// increments (variance h = T/2^level each) per driving factor.
struct NoiseGrid {
  std::vector<std::vector<double>> factors;
  int level = 0;
};

inline NoiseGrid make_noise_grid(int level, double maturity, int n_factors,
                                 std::uint64_t seed, std::uint64_t sample,
                                 std::uint64_t factor_base) {
  if (level < 0) throw std::invalid_argument("make_noise_grid: negative level");
  NoiseGrid grid;
  grid.level = level;
  const std::size_t steps = std::size_t{1} << level;
  const double sqrt_h = std::sqrt(maturity / static_cast<double>(steps));
  grid.factors.resize(static_cast<std::size_t>(n_factors));
  for (int f = 0; f < n_factors; ++f) {
    PhiloxStream stream(seed, sample, factor_base + static_cast<std::uint64_t>(f));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& inc = grid.factors[static_cast<std::size_t>(f)];
    inc.resize(steps);
    for (auto& x : inc) x = sqrt_h * normal(stream);
  }
  return grid;
}

}  // namespace unbiased
