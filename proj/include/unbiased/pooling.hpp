#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace unbiased {

/// Cost of one level-n path in work units: t_n = 2^n, t_0 = 1.
inline double level_cost(int n) { return std::ldexp(1.0, n); }

/// Contiguous index block [left, right] sharing a common optimizer value.
struct Block {
  int left = 0;
  int right = 0;
  double value = 0.0;  // sqrt(sum beta / (mu * sum t)) over the block
  double beta_sum = 0.0;
  double cost_sum = 0.0;
};

/// Monotone block partition of 0..m produced by adjacent-violator pooling.
struct PooledBlockList {
  std::vector<Block> blocks;
  double mu = 1.0;

  bool last_is_singleton() const {
    return !blocks.empty() && blocks.back().left == blocks.back().right;
  }
};

namespace detail {

inline void check_betas(std::span<const double> beta) {
  if (beta.empty()) throw std::invalid_argument("beta sequence is empty");
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (!(beta[i] > 0.0)) {
      throw std::invalid_argument("beta[" + std::to_string(i) +
                                  "] must be positive");
    }
  }
}

// Push the singleton block {n, n} and restore strict monotonicity by merging
// leftward whenever a block value is <= its successor (ties merge).
inline void push_and_merge(PooledBlockList& pbl, int n, double beta_n) {
  const double t_n = level_cost(n);
  pbl.blocks.push_back(
      {n, n, std::sqrt(beta_n / (pbl.mu * t_n)), beta_n, t_n});
  while (pbl.blocks.size() >= 2) {
    Block& prev = pbl.blocks[pbl.blocks.size() - 2];
    Block& last = pbl.blocks.back();
    if (prev.value > last.value) break;
    prev.right = last.right;
    prev.beta_sum += last.beta_sum;
    prev.cost_sum += last.cost_sum;
    prev.value = std::sqrt(prev.beta_sum / (pbl.mu * prev.cost_sum));
    pbl.blocks.pop_back();
  }
}

}  // namespace detail

/// Stack-based adjacent-violator pooling for the dual problem
/// min sum_n (beta_n/F_n + mu t_n F_n) over non-increasing F > 0.
/// Returns the unique strictly decreasing block partition; O(m) total work.
inline PooledBlockList pool_adjacent_violators(std::span<const double> beta,
                                               double mu) {
  detail::check_betas(beta);
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  PooledBlockList pbl;
  pbl.mu = mu;
  pbl.blocks.reserve(beta.size());
  for (std::size_t n = 0; n < beta.size(); ++n) {
    detail::push_and_merge(pbl, static_cast<int>(n), beta[n]);
  }
  return pbl;
}

/// Expand a block partition over 0..m into per-index values.
inline std::vector<double> step_function(const PooledBlockList& pbl) {
  std::vector<double> f;
  for (const Block& b : pbl.blocks) {
    for (int n = b.left; n <= b.right; ++n) f.push_back(b.value);
  }
  return f;
}

/// m-truncated optimal distribution: pooled step function normalized so
/// F_0 = 1. The normalized result does not depend on mu; mu is fixed at 1.
inline std::pair<std::vector<double>, PooledBlockList> solve_truncated(
    std::span<const double> beta) {
  PooledBlockList pbl = pool_adjacent_violators(beta, 1.0);
  std::vector<double> f = step_function(pbl);
  const double f0 = f.front();
  for (double& x : f) x /= f0;
  return {std::move(f), std::move(pbl)};
}

/// Geometric continuation ratio past the truncation point:
/// rho = sqrt(beta_{m+1} / (2 beta_m)). Must be < 1/2 for finite work.
inline double tail_ratio(double beta_m, double beta_m1) {
  if (!(beta_m > 0.0) || !(beta_m1 > 0.0)) {
    throw std::invalid_argument("tail_ratio requires positive betas");
  }
  return std::sqrt(beta_m1 / (2.0 * beta_m));
}

/// Efficiency objective g(F) = (sum beta_n/F_n)(sum t_n F_n) with t_n = 2^n.
inline double evaluate_objective(std::span<const double> f,
                                 std::span<const double> beta) {
  if (f.size() != beta.size()) {
    throw std::invalid_argument("objective: F and beta lengths differ");
  }
  double variance_part = 0.0;
  double work_part = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    variance_part += beta[n] / f[n];
    work_part += level_cost(static_cast<int>(n)) * f[n];
  }
  return variance_part * work_part;
}

}  // namespace unbiased
