#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "unbiased/models.hpp"
#include "unbiased/samplers.hpp"
#include "unbiased/solver.hpp"

namespace unbiased {

/// Sample moments for one level n, estimated against the proxy Y ~ Y_proxy.
struct LevelStats {
  int n = 0;
  double mean_yn = 0.0;
  double mean_sq_gap_n = 0.0;     // estimate of E[(Y_n - Y)^2]
  double mean_sq_gap_prev = 0.0;  // estimate of E[(Y_{n-1} - Y)^2], Y_{-1} = 0
  double mean_y_prev = 0.0;       // estimate of E(Y_{n-1})
  double var_diff = 0.0;          // sample variance of Y_n - Y_{n-1}
  double mean_y_ref = 0.0;        // estimate of E(Y) from the proxy level
  long samples = 0;
  int proxy_level = 0;
};

/// One pool of proxy-level ladders serves every n at once: each ladder yields
/// the whole triple sequence (Y_{n-1}, Y_n, Y_proxy), so the adaptive loop's
/// incremental beta requests only read new columns.
class LadderPool {
 public:
  LadderPool(const ModelSpec& spec, int proxy_level, long samples,
             std::uint64_t seed)
      : proxy_level_(proxy_level), samples_(samples) {
    validate(spec);
    if (proxy_level < 1) throw std::invalid_argument("pool: proxy_level must be >= 1");
    if (samples < 1) throw std::invalid_argument("pool: samples must be >= 1");
    const std::size_t width = static_cast<std::size_t>(proxy_level) + 1;
    y_.resize(static_cast<std::size_t>(samples) * width);
    for (long i = 0; i < samples; ++i) {
      LevelLadder ladder = make_ladder(spec, proxy_level, seed,
                                       static_cast<std::uint64_t>(i), 0);
      std::copy(ladder.values.begin(), ladder.values.end(),
                y_.begin() + static_cast<std::size_t>(i) * width);
    }
    double sum = 0.0, comp = 0.0;
    for (long i = 0; i < samples; ++i) {
      kahan_add(sum, comp, value(i, proxy_level));
    }
    mean_y_ = sum / static_cast<double>(samples);
  }

  int proxy_level() const { return proxy_level_; }
  long samples() const { return samples_; }
  double mean_y() const { return mean_y_; }

  double value(long sample, int level) const {
    return y_[static_cast<std::size_t>(sample) *
                  (static_cast<std::size_t>(proxy_level_) + 1) +
              static_cast<std::size_t>(level)];
  }

  LevelStats stats(int n) const {
    if (n < 0 || n > proxy_level_) {
      throw std::invalid_argument("pool: level outside proxy range");
    }
    LevelStats s;
    s.n = n;
    s.samples = samples_;
    s.proxy_level = proxy_level_;
    s.mean_y_ref = mean_y_;

    double sum_yn = 0, c1 = 0, sum_gap = 0, c2 = 0, sum_gap_prev = 0, c3 = 0;
    double sum_prev = 0, c4 = 0, sum_d = 0, c5 = 0, sum_d2 = 0, c6 = 0;
    for (long i = 0; i < samples_; ++i) {
      const double y = value(i, proxy_level_);
      const double yn = value(i, n);
      const double yp = n > 0 ? value(i, n - 1) : 0.0;
      kahan_add(sum_yn, c1, yn);
      kahan_add(sum_gap, c2, (yn - y) * (yn - y));
      kahan_add(sum_gap_prev, c3, (yp - y) * (yp - y));
      kahan_add(sum_prev, c4, yp);
      kahan_add(sum_d, c5, yn - yp);
      kahan_add(sum_d2, c6, (yn - yp) * (yn - yp));
    }
    const double inv_n = 1.0 / static_cast<double>(samples_);
    s.mean_yn = sum_yn * inv_n;
    s.mean_sq_gap_n = sum_gap * inv_n;
    s.mean_sq_gap_prev = sum_gap_prev * inv_n;
    s.mean_y_prev = sum_prev * inv_n;
    const double mean_d = sum_d * inv_n;
    s.var_diff = samples_ > 1
                     ? (sum_d2 - static_cast<double>(samples_) * mean_d * mean_d) /
                           static_cast<double>(samples_ - 1)
                     : 0.0;
    if (s.var_diff < 0.0) s.var_diff = 0.0;  // roundoff
    return s;
  }

 private:
  static void kahan_add(double& sum, double& comp, double x) {
    const double t = x - comp;
    const double next = sum + t;
    comp = (next - sum) - t;
    sum = next;
  }

  int proxy_level_;
  long samples_;
  double mean_y_ = 0.0;
  std::vector<double> y_;
};

inline constexpr double kDefaultBetaFloor = 1e-12;
inline constexpr long kDefaultCoupledSamples = 500'000;
inline constexpr long kDefaultIndependentSamples = 1'000'000;
inline constexpr int kDefaultProxyLevel = 10;

/// Moments for a single level; builds a throwaway pool, so prefer LadderPool
/// directly when several levels are needed.
inline LevelStats estimate_level_stats(const ModelSpec& spec, CouplingKind,
                                       int n, int proxy_level, long samples,
                                       std::uint64_t seed) {
  if (proxy_level <= n) {
    throw std::invalid_argument("estimate_level_stats: proxy_level must exceed n");
  }
  if (samples < 1000) {
    throw std::invalid_argument("estimate_level_stats: need at least 10^3 samples");
  }
  return LadderPool(spec, proxy_level, samples, seed).stats(n);
}

struct BetaEstimationResult {
  BetaSeries series;
  std::vector<double> v;  // raw level coefficients before clamping
};

/// Convert level moments into the beta sequence of the efficiency objective:
/// coupled   v_n = E[(Y_{n-1}-Y)^2] - E[(Y_n-Y)^2]
/// independent v_n = var(Y_n - Y_{n-1}) + (EY - EY_{n-1})^2 - (EY - EY_n)^2
/// beta_0 = v_0 - (EY)^2, beta_n = v_n. Non-positive entries are floored and
/// recorded as clamp warnings.
inline BetaEstimationResult betas_from_stats(std::span<const LevelStats> stats,
                                             CouplingKind kind, double floor) {
  if (stats.empty()) throw std::invalid_argument("betas_from_stats: empty stats");
  if (!(floor > 0.0)) throw std::invalid_argument("betas_from_stats: floor must be positive");
  BetaEstimationResult out;
  out.series.kind = kind;
  out.series.mean_y = stats.front().mean_y_ref;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const LevelStats& s = stats[i];
    if (s.n != static_cast<int>(i)) {
      throw std::invalid_argument("betas_from_stats: stats must be contiguous from n=0");
    }
    double v;
    if (kind == CouplingKind::coupled) {
      v = s.mean_sq_gap_prev - s.mean_sq_gap_n;
    } else {
      const double gap_prev = s.mean_y_ref - s.mean_y_prev;
      const double gap_n = s.mean_y_ref - s.mean_yn;
      v = s.var_diff + gap_prev * gap_prev - gap_n * gap_n;
    }
    out.v.push_back(v);
    double b = i == 0 ? v - out.series.mean_y * out.series.mean_y : v;
    if (!(b > 0.0)) {
      b = floor;
      out.series.provenance.clamp_warnings.push_back(static_cast<int>(i));
    }
    out.series.values.push_back(b);
  }
  return out;
}

/// Beta source over a shared ladder pool, suitable for adaptive_solve.
class PooledBetaSource {
 public:
  PooledBetaSource(const LadderPool& pool, CouplingKind kind,
                   double floor = kDefaultBetaFloor)
      : pool_(pool), kind_(kind), floor_(floor) {}

  double operator()(int n) const {
    if (n > pool_.proxy_level()) {
      throw std::domain_error("beta source: level exceeds proxy level");
    }
    LevelStats s = pool_.stats(n);
    double b = raw_beta(s);
    if (n == 0) b -= s.mean_y_ref * s.mean_y_ref;
    if (!(b > 0.0)) {
      clamped_.push_back(n);
      b = floor_;
    }
    return b;
  }

  const std::vector<int>& clamp_warnings() const { return clamped_; }

 private:
  double raw_beta(const LevelStats& s) const {
    if (kind_ == CouplingKind::coupled) {
      return s.mean_sq_gap_prev - s.mean_sq_gap_n;
    }
    const double gap_prev = s.mean_y_ref - s.mean_y_prev;
    const double gap_n = s.mean_y_ref - s.mean_yn;
    return s.var_diff + gap_prev * gap_prev - gap_n * gap_n;
  }

  const LadderPool& pool_;
  CouplingKind kind_;
  double floor_;
  mutable std::vector<int> clamped_;
};

/// Full estimation pipeline: one pool, stats for 0..max_level, beta series
/// with provenance filled in.
inline BetaEstimationResult estimate_betas(const ModelSpec& spec,
                                           CouplingKind kind, int max_level,
                                           int proxy_level, long samples,
                                           std::uint64_t seed,
                                           double floor = kDefaultBetaFloor) {
  if (proxy_level <= max_level) {
    throw std::invalid_argument("estimate_betas: proxy_level must exceed max_level");
  }
  LadderPool pool(spec, proxy_level, samples, seed);
  std::vector<LevelStats> stats;
  stats.reserve(static_cast<std::size_t>(max_level) + 1);
  for (int n = 0; n <= max_level; ++n) stats.push_back(pool.stats(n));
  BetaEstimationResult result = betas_from_stats(stats, kind, floor);
  result.series.provenance.model_id = spec.model_id();
  result.series.provenance.param_hash = param_hash(spec);
  result.series.provenance.proxy_level = proxy_level;
  result.series.provenance.samples_per_level = samples;
  result.series.provenance.rng_seed = seed;
  return result;
}

}  // namespace unbiased
