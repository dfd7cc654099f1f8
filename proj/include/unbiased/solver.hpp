#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "unbiased/law.hpp"
#include "unbiased/pooling.hpp"

namespace unbiased {

enum class CouplingKind { coupled, independent };

inline std::string to_string(CouplingKind k) {
  return k == CouplingKind::coupled ? "coupled" : "independent";
}

/// Where a beta series came from, for cache validation and reporting.
struct BetaProvenance {
  std::string model_id;
  std::uint64_t param_hash = 0;
  int proxy_level = 0;
  long samples_per_level = 0;
  std::uint64_t rng_seed = 0;
  std::vector<int> clamp_warnings;  // indices where beta was floored
};

/// Estimated level coefficients beta_0..beta_M (positive after clamping)
/// together with the estimate of E(Y) they were derived from.
struct BetaSeries {
  std::vector<double> values;
  double mean_y = 0.0;
  CouplingKind kind = CouplingKind::coupled;
  BetaProvenance provenance;
};

/// Outcome of the adaptive truncation search.
struct SolverReport {
  int adaptive_m = 0;
  PooledBlockList blocks;
  double stop_ratio = 0.0;  // beta_m / beta_{m+1}
  bool stop_ratio_ok = false;
  bool last_block_singleton = false;
  bool hit_m_max = false;
  BetaSeries betas_used;
};

/// Adaptive construction of the infinite-horizon optimal distribution.
/// beta_source(n) supplies clamped-positive estimates of beta_n; exactly one
/// new beta is requested per iteration (beta_0 and beta_1 up front). Stops at
/// the first m >= 1 where |beta_m/beta_{m+1} - 4^p| < epsilon and the final
/// pooled block is a singleton; the geometric tail then continues with
/// rho = sqrt(beta_{m+1}/(2 beta_m)). If m_max is reached first, the head is
/// the m_max-truncated solution and the tail falls back to the approximate
/// ratio 2^{-(2p+1)/2}, with the report flagged.
inline std::pair<RandomizationLaw, SolverReport> adaptive_solve(
    const std::function<double(int)>& beta_source, double p, double epsilon,
    int m_max = 10) {
  if (!(p > 0.5)) throw std::invalid_argument("adaptive_solve: p must exceed 1/2");
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw std::invalid_argument("adaptive_solve: epsilon must lie in (0, 1)");
  }
  if (m_max < 1) throw std::invalid_argument("adaptive_solve: m_max must be >= 1");

  const double four_p = std::pow(4.0, p);
  std::vector<double> beta;
  PooledBlockList pbl;
  pbl.mu = 1.0;
  SolverReport report;

  auto fetch = [&](int n) {
    const double b = beta_source(n);
    if (!(b > 0.0)) {
      throw std::domain_error("beta_source returned non-positive beta[" +
                              std::to_string(n) + "]");
    }
    beta.push_back(b);
  };

  int m = 0;
  for (;; ++m) {
    if (m == 0) {
      fetch(0);
      fetch(1);
    } else {
      fetch(m + 1);
    }
    detail::push_and_merge(pbl, m, beta[static_cast<std::size_t>(m)]);

    const double ratio = beta[static_cast<std::size_t>(m)] /
                         beta[static_cast<std::size_t>(m) + 1];
    const bool ratio_ok = m >= 1 && std::abs(ratio - four_p) < epsilon;
    const bool singleton = pbl.last_is_singleton();
    // ratio > 2 keeps rho = sqrt(beta_{m+1}/(2 beta_m)) below 1/2; a law with
    // rho >= 1/2 has infinite expected work and is never returned.
    if (ratio_ok && singleton && ratio > 2.0) {
      report.adaptive_m = m;
      report.stop_ratio = ratio;
      report.stop_ratio_ok = true;
      report.last_block_singleton = true;
      break;
    }
    if (m == m_max) {
      report.adaptive_m = m;
      report.stop_ratio = ratio;
      report.stop_ratio_ok = ratio_ok;
      report.last_block_singleton = singleton;
      report.hit_m_max = true;
      break;
    }
  }

  std::vector<double> head = step_function(pbl);
  const double f0 = head.front();
  for (double& x : head) x /= f0;

  const double rho = report.hit_m_max
                         ? std::pow(2.0, -(2.0 * p + 1.0) / 2.0)
                         : tail_ratio(beta[static_cast<std::size_t>(m)],
                                      beta[static_cast<std::size_t>(m) + 1]);

  report.blocks = std::move(pbl);
  report.betas_used.values = std::move(beta);
  return {RandomizationLaw(std::move(head), rho, p), std::move(report)};
}

}  // namespace unbiased
