#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "unbiased/law.hpp"
#include "unbiased/models.hpp"
#include "unbiased/samplers.hpp"

namespace unbiased {

enum class EstimatorKind { coupled_sum, independent_sum };

inline std::string to_string(EstimatorKind k) {
  return k == EstimatorKind::coupled_sum ? "coupled" : "independent";
}

struct EstimatorSample {
  double z = 0.0;
  int level = 0;           // drawn N
  double work_units = 0.0;
};

struct BenchResult {
  long n_samples = 0;
  double mean = 0.0;
  double variance_of_mean = 0.0;
  double wall_time_s = 0.0;
  double mean_work_units = 0.0;
  double var_time_product = 0.0;
  double var_work_product = 0.0;
  long level_cap_hits = 0;
};

// Factor slots within one sample's stream space: slot 0 draws N, the rest
// feed the model ladders. The independent estimator burns a disjoint range
// per increment so every pair is fresh.
inline constexpr std::uint64_t kLevelDrawFactor = 0;
inline constexpr std::uint64_t kLadderFactorBase = 1;
inline constexpr std::uint64_t kIndependentFactorStride = 8;

/// One realization of the coupled sum estimator:
/// Z = sum_{n<=N} (Y_n - Y_{n-1}) / P(N >= n), all Y_n from one ladder.
inline EstimatorSample coupled_sum_draw(const RandomizationLaw& law,
                                        const ModelSpec& spec,
                                        std::uint64_t seed,
                                        std::uint64_t sample) {
  PhiloxStream level_stream(seed, sample, kLevelDrawFactor);
  const int n = sample_level(law, level_stream.uniform01());
  const LevelLadder ladder = make_ladder(spec, n, seed, sample, kLadderFactorBase);

  EstimatorSample out;
  out.level = n;
  double prev = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double yk = ladder.values[static_cast<std::size_t>(k)];
    out.z += (yk - prev) / law.tail_prob(k);
    prev = yk;
    out.work_units += level_cost(k);
  }
  return out;
}

/// One realization of the independent sum estimator: each increment comes
/// from a fresh coupled pair (Y~_{n-1}, Y~_n) with its own noise. Work charges
/// both members of the pair: 2^n + 2^{n-1}, with the n = 0 term costing 1.
inline EstimatorSample independent_sum_draw(const RandomizationLaw& law,
                                            const ModelSpec& spec,
                                            std::uint64_t seed,
                                            std::uint64_t sample) {
  PhiloxStream level_stream(seed, sample, kLevelDrawFactor);
  const int n = sample_level(law, level_stream.uniform01());

  EstimatorSample out;
  out.level = n;
  for (int k = 0; k <= n; ++k) {
    const std::uint64_t base =
        kLadderFactorBase + kIndependentFactorStride * static_cast<std::uint64_t>(k);
    const LevelLadder pair = make_ladder(spec, k, seed, sample, base);
    const double y_k = pair.values[static_cast<std::size_t>(k)];
    const double y_prev = k > 0 ? pair.values[static_cast<std::size_t>(k) - 1] : 0.0;
    out.z += (y_k - y_prev) / law.tail_prob(k);
    out.work_units += level_cost(k) + (k > 0 ? level_cost(k - 1) : 0.0);
  }
  return out;
}

/// Batch runner: n_samples independent draws, one named stream space per
/// sample index, deterministic given the seed. Wall time covers only the
/// sampling loop. variance_of_mean = (unbiased sample variance) / n_samples.
inline BenchResult run_batch(EstimatorKind kind, const RandomizationLaw& law,
                             const ModelSpec& spec, long n_samples,
                             std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("run_batch: n_samples must be >= 1");
  if (!check_l2_condition(law, law.p()).pass) {
    throw std::invalid_argument("run_batch: law fails the L2 condition for this p");
  }

  double sum_z = 0.0, comp_z = 0.0;
  double sum_z2 = 0.0, comp_z2 = 0.0;
  double sum_w = 0.0, comp_w = 0.0;
  long cap_hits = 0;
  auto kahan = [](double& sum, double& comp, double x) {
    const double t = x - comp;
    const double next = sum + t;
    comp = (next - sum) - t;
    sum = next;
  };

  const auto t0 = std::chrono::steady_clock::now();
  for (long i = 0; i < n_samples; ++i) {
    const EstimatorSample s =
        kind == EstimatorKind::coupled_sum
            ? coupled_sum_draw(law, spec, seed, static_cast<std::uint64_t>(i))
            : independent_sum_draw(law, spec, seed, static_cast<std::uint64_t>(i));
    kahan(sum_z, comp_z, s.z);
    kahan(sum_z2, comp_z2, s.z * s.z);
    kahan(sum_w, comp_w, s.work_units);
    if (s.level >= kMaxLevel) ++cap_hits;
  }
  const auto t1 = std::chrono::steady_clock::now();

  BenchResult r;
  r.n_samples = n_samples;
  const double n = static_cast<double>(n_samples);
  r.mean = sum_z / n;
  const double sample_var =
      n_samples > 1 ? (sum_z2 - n * r.mean * r.mean) / (n - 1.0) : 0.0;
  r.variance_of_mean = sample_var > 0.0 ? sample_var / n : 0.0;
  r.mean_work_units = sum_w / n;
  r.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  r.var_time_product = r.variance_of_mean * r.wall_time_s;
  r.var_work_product = r.variance_of_mean * r.mean_work_units * n;
  r.level_cap_hits = cap_hits;
  return r;
}

}  // namespace unbiased
