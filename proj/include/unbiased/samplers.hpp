#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "unbiased/models.hpp"
#include "unbiased/noise.hpp"
#include "unbiased/pooling.hpp"

namespace unbiased {

/// Coupled approximations Y_0..Y_n of one payoff realization, all produced
/// from a single realization of the driving noise. Level k uses step T/2^k.
struct LevelLadder {
  std::vector<double> values;
  int level = 0;
};

inline double european_call_payoff(double terminal_price, double strike,
                                   double discount) {
  return discount * std::max(terminal_price - strike, 0.0);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Closed-form Black-Scholes call price; unbiasedness oracle for the
/// estimator tests.
inline double bs_closed_form_price(const ModelSpec& spec) {
  const auto& bs = std::get<BlackScholesParams>(spec.params);
  const double df = std::exp(-bs.r * spec.maturity);
  if (bs.sigma <= 0.0) {
    return std::max(spec.s0 - spec.strike * df, 0.0);
  }
  const double vol = bs.sigma * std::sqrt(spec.maturity);
  const double d1 = (std::log(spec.s0 / spec.strike) +
                     (bs.r + 0.5 * bs.sigma * bs.sigma) * spec.maturity) / vol;
  const double d2 = d1 - vol;
  return spec.s0 * normal_cdf(d1) - spec.strike * df * normal_cdf(d2);
}

/// Drift-implicit Milstein update for the CIR variance, solved for the new
/// value and truncated at zero if the numerator goes negative (possible at
/// coarse steps even under Feller).
inline double heston_implicit_variance_step(double v, double k, double theta,
                                            double sigma, double h, double db2) {
  const double numerator = v + k * theta * h + sigma * std::sqrt(v) * db2 +
                           (sigma * sigma / 4.0) * (db2 * db2 - h);
  return std::max(numerator, 0.0) / (1.0 + k * h);
}

namespace detail {

inline double bs_milstein_terminal(const BlackScholesParams& bs, double s0,
                                   double h, std::span<const double> db) {
  double s = s0;
  for (double dw : db) {
    s += bs.r * s * h + bs.sigma * s * dw +
         0.5 * bs.sigma * bs.sigma * s * (dw * dw - h);
  }
  return s;
}

inline double heston_milstein_terminal(const HestonParams& hp, double s0,
                                       double h, std::span<const double> db1,
                                       std::span<const double> db2) {
  double x = std::log(s0);
  double v = hp.v0;
  for (std::size_t j = 0; j < db1.size(); ++j) {
    x += (hp.r - 0.5 * v) * h + std::sqrt(v) * db1[j] +
         (hp.sigma / 4.0) * db1[j] * db2[j];
    v = heston_implicit_variance_step(v, hp.k, hp.theta, hp.sigma, h, db2[j]);
  }
  return std::exp(x);
}

}  // namespace detail

/// Milstein ladder for Black-Scholes: level k <= n runs the scheme with step
/// T/2^k on k-level aggregated increments; Y_k is the discounted call payoff.
inline LevelLadder bs_milstein_ladder(const ModelSpec& spec, int level,
                                      const NoiseGrid& noise) {
  const auto& bs = std::get<BlackScholesParams>(spec.params);
  if (noise.factors.size() != 1 ||
      noise.factors[0].size() != (std::size_t{1} << level)) {
    throw std::invalid_argument("bs_milstein_ladder: noise grid mismatch");
  }
  const double discount = std::exp(-bs.r * spec.maturity);
  LevelLadder ladder;
  ladder.level = level;
  ladder.values.resize(static_cast<std::size_t>(level) + 1);

  std::vector<double> db = noise.factors[0];
  for (int k = level;; --k) {
    const double h = spec.maturity / level_cost(k);
    const double terminal = detail::bs_milstein_terminal(bs, spec.s0, h, db);
    ladder.values[static_cast<std::size_t>(k)] =
        european_call_payoff(terminal, spec.strike, discount);
    if (k == 0) break;
    db = coarsen_increments(db);
  }
  return ladder;
}

/// Drift-implicit Milstein ladder for Heston; both driving factors are
/// aggregated pairwise between levels.
inline LevelLadder heston_milstein_ladder(const ModelSpec& spec, int level,
                                          const NoiseGrid& noise) {
  const auto& hp = std::get<HestonParams>(spec.params);
  if (noise.factors.size() != 2 ||
      noise.factors[0].size() != (std::size_t{1} << level)) {
    throw std::invalid_argument("heston_milstein_ladder: noise grid mismatch");
  }
  const double discount = std::exp(-hp.r * spec.maturity);
  LevelLadder ladder;
  ladder.level = level;
  ladder.values.resize(static_cast<std::size_t>(level) + 1);

  std::vector<double> db1 = noise.factors[0];
  std::vector<double> db2 = noise.factors[1];
  for (int k = level;; --k) {
    const double h = spec.maturity / level_cost(k);
    const double terminal =
        detail::heston_milstein_terminal(hp, spec.s0, h, db1, db2);
    ladder.values[static_cast<std::size_t>(k)] =
        european_call_payoff(terminal, spec.strike, discount);
    if (k == 0) break;
    db1 = coarsen_increments(db1);
    db2 = coarsen_increments(db2);
  }
  return ladder;
}

/// Exact CIR transition over step h via the noncentral chi-squared law with
/// 4*k*theta/sigma^2 degrees of freedom; never produces negative values.
template <class Rng>
double cir_exact_step(double v, double k, double theta, double sigma, double h,
                      Rng& rng) {
  if (sigma <= 0.0) {
    // degenerate mean reversion
    return theta + (v - theta) * std::exp(-k * h);
  }
  const double ex = std::exp(-k * h);
  const double c = sigma * sigma * (1.0 - ex) / (4.0 * k);
  const double dof = 4.0 * k * theta / (sigma * sigma);
  const double lambda = v * ex / c;
  double x;
  if (dof > 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::chi_squared_distribution<double> chi2(dof - 1.0);
    const double z = normal(rng) + std::sqrt(lambda);
    x = z * z + chi2(rng);
  } else {
    // Poisson-mixed central chi-squared composition
    std::poisson_distribution<long> poisson(lambda / 2.0);
    const long j = poisson(rng);
    std::chi_squared_distribution<double> chi2(dof + 2.0 * static_cast<double>(j));
    x = chi2(rng);
  }
  return c * x;
}

/// Exact Ornstein-Uhlenbeck transition for the Hull-White short rate.
inline double ou_exact_step(double r, double alpha, double beta, double gamma,
                            double h, double z) {
  const double ex = std::exp(-alpha * h);
  const double sd =
      gamma * std::sqrt((1.0 - ex * ex) / (2.0 * alpha));
  return beta + (r - beta) * ex + sd * z;
}

/// Semi-exact ladder for Heston-Hull-White: V and r are simulated exactly on
/// the finest grid, coarser levels reuse every 2^(n-k)-th grid point, integrals
/// are left-point Riemann sums, and one terminal standard normal is shared by
/// all levels. Y_k uses the stochastic discount exp(-int r dt).
template <class Rng>
LevelLadder hhw_semi_exact_ladder(const ModelSpec& spec, int level,
                                  Rng& v_stream, Rng& r_stream,
                                  Rng& shared_stream) {
  const auto& w = std::get<HestonHullWhiteParams>(spec.params);
  const std::size_t steps = std::size_t{1} << level;
  const double h = spec.maturity / static_cast<double>(steps);

  std::vector<double> v(steps + 1), r(steps + 1);
  v[0] = w.v0;
  r[0] = w.r0;
  for (std::size_t i = 0; i < steps; ++i) {
    v[i + 1] = cir_exact_step(v[i], w.k, w.theta, w.sigma, h, v_stream);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < steps; ++i) {
    const double z = w.gamma > 0.0 ? normal(r_stream) : 0.0;
    r[i + 1] = ou_exact_step(r[i], w.alpha, w.beta, w.gamma, h, z);
  }
  const double terminal_normal = normal(shared_stream);

  LevelLadder ladder;
  ladder.level = level;
  ladder.values.resize(static_cast<std::size_t>(level) + 1);
  const double x0 = std::log(spec.s0);
  const double vt = v[steps];
  // rho == 0 kills both rho/sigma terms; avoid 0/0 in the degenerate limit
  const double rho_over_sigma = w.rho != 0.0 ? w.rho / w.sigma : 0.0;
  for (int k = 0; k <= level; ++k) {
    const std::size_t stride = std::size_t{1} << (level - k);
    const std::size_t n_k = std::size_t{1} << k;
    const double h_k = spec.maturity / static_cast<double>(n_k);
    double int_v = 0.0, int_r = 0.0;
    for (std::size_t i = 0; i < n_k; ++i) {
      int_v += v[i * stride];
      int_r += r[i * stride];
    }
    int_v *= h_k;
    int_r *= h_k;
    const double x = x0 + int_r + (rho_over_sigma * w.k - 0.5) * int_v +
                     rho_over_sigma * (vt - w.v0 - w.k * w.theta * spec.maturity) +
                     std::sqrt(1.0 - w.rho * w.rho) * std::sqrt(int_v) *
                         terminal_normal;
    ladder.values[static_cast<std::size_t>(k)] =
        european_call_payoff(std::exp(x), spec.strike, std::exp(-int_r));
  }
  return ladder;
}

/// Dispatch on the model variant; streams are derived from
/// (seed, sample, factor_base + factor slot), so ladders are pure functions
/// of their arguments.
inline LevelLadder make_ladder(const ModelSpec& spec, int level,
                               std::uint64_t seed, std::uint64_t sample,
                               std::uint64_t factor_base) {
  if (std::holds_alternative<BlackScholesParams>(spec.params)) {
    return bs_milstein_ladder(
        spec, level, make_noise_grid(level, spec.maturity, 1, seed, sample,
                                     factor_base));
  }
  if (std::holds_alternative<HestonParams>(spec.params)) {
    return heston_milstein_ladder(
        spec, level, make_noise_grid(level, spec.maturity, 2, seed, sample,
                                     factor_base));
  }
  PhiloxStream v_stream(seed, sample, factor_base);
  PhiloxStream r_stream(seed, sample, factor_base + 1);
  PhiloxStream shared_stream(seed, sample, factor_base + 2);
  return hhw_semi_exact_ladder(spec, level, v_stream, r_stream, shared_stream);
}

}  // namespace unbiased
