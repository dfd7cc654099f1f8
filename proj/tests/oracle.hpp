// Test-only independent oracles for the distribution solver. These never call
// the pooling code under test: the grid oracle enumerates feasible step
// functions directly, and the descent oracle minimizes the convex dual
// numerically with a least-squares isotonic projection.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace oracle {

inline double objective(std::span<const double> f, std::span<const double> beta) {
  double a = 0.0, b = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    a += beta[n] / f[n];
    b += std::ldexp(1.0, static_cast<int>(n)) * f[n];
  }
  return a * b;
}

/// Exhaustive search over non-increasing F with F_0 = 1 and F_1..F_m drawn
/// from a log-spaced grid. Exponential in m; intended for small m only.
inline double grid_min_objective(std::span<const double> beta, int grid_points,
                                 double lo = 1e-6) {
  const std::size_t m = beta.size() - 1;
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double t = static_cast<double>(i) / (grid_points - 1);
    grid[static_cast<std::size_t>(i)] = lo * std::pow(1.0 / lo, t);
  }
  std::vector<double> f(beta.size(), 1.0);
  double best = objective(f, beta);
  if (m == 0) return best;
  // depth-first over non-increasing grid choices (grid sorted ascending,
  // grid.back() == 1 so the first index bound covers the full grid)
  auto rec = [&](auto&& self, std::size_t pos, int max_idx) -> void {
    for (int i = max_idx; i >= 0; --i) {
      f[pos] = grid[static_cast<std::size_t>(i)];
      if (pos == m) {
        best = std::min(best, objective(f, beta));
      } else {
        self(self, pos + 1, i);
      }
    }
  };
  rec(rec, 1, grid_points - 1);
  return best;
}

/// Least-squares projection onto the non-increasing cone (pool adjacent
/// averages, the classical isotonic regression).
inline void project_non_increasing(std::vector<double>& v) {
  struct Blk {
    double sum;
    int count;
  };
  std::vector<Blk> blocks;
  blocks.reserve(v.size());
  for (double x : v) {
    blocks.push_back({x, 1});
    while (blocks.size() >= 2) {
      const Blk& prev = blocks[blocks.size() - 2];
      const Blk& last = blocks.back();
      if (prev.sum / prev.count > last.sum / last.count) break;
      blocks[blocks.size() - 2] = {prev.sum + last.sum, prev.count + last.count};
      blocks.pop_back();
    }
  }
  std::size_t i = 0;
  for (const Blk& b : blocks) {
    const double mean = b.sum / b.count;
    for (int c = 0; c < b.count; ++c) v[i++] = mean;
  }
}

/// Projected gradient descent on the convex dual
///   D(F) = sum_n (beta_n / F_n + t_n F_n),  t_n = 2^n,
/// over the non-increasing positive cone, then normalize by F_0 and report
/// the primal objective. Independent numerical route to the same optimum.
inline double projected_descent_min(std::span<const double> beta,
                                    int max_iter = 200000, double tol = 1e-14) {
  const std::size_t n = beta.size();
  std::vector<double> f(n), grad(n), trial(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = std::sqrt(beta[i] / std::ldexp(1.0, static_cast<int>(i)));
  }
  project_non_increasing(f);
  const double floor_val = 1e-300;
  auto dual = [&](const std::vector<double>& x) {
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d += beta[i] / x[i] + std::ldexp(1.0, static_cast<int>(i)) * x[i];
    }
    return d;
  };
  double value = dual(f);
  double step = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = -beta[i] / (f[i] * f[i]) + std::ldexp(1.0, static_cast<int>(i));
    }
    bool improved = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = std::max(f[i] - step * grad[i], floor_val);
      }
      project_non_increasing(trial);
      const double trial_value = dual(trial);
      if (trial_value < value) {
        f = trial;
        improved = true;
        const double rel = (value - trial_value) / std::abs(value);
        value = trial_value;
        step *= 1.5;
        if (rel < tol) it = max_iter;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  std::vector<double> normalized(n);
  for (std::size_t i = 0; i < n; ++i) normalized[i] = f[i] / f[0];
  return objective(normalized, beta);
}

}  // namespace oracle
