#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "unbiased/pooling.hpp"

namespace unbiased {

// Drawn levels are capped here; tail mass below F_m * rho^62 is unreachable
// in any realistic run and the cap keeps u == 0 finite.
inline constexpr int kMaxLevel = 62;

/// Randomization distribution for the truncation level N: explicit head of
/// tail probabilities F_0..F_m plus a geometric tail with ratio rho.
///   P(N >= n) = F_n            for n <= m
///   P(N >= n) = F_m rho^(n-m)  for n  > m
class RandomizationLaw {
 public:
  RandomizationLaw(std::vector<double> head, double tail_ratio, double p)
      : head_(std::move(head)), rho_(tail_ratio), p_(p) {
    validate();
  }

  const std::vector<double>& head() const { return head_; }
  double rho() const { return rho_; }
  double p() const { return p_; }
  int m() const { return static_cast<int>(head_.size()) - 1; }

  /// Tail probability P(N >= n).
  double tail_prob(int n) const {
    if (n < 0) return 1.0;
    if (n <= m()) return head_[static_cast<std::size_t>(n)];
    return head_.back() * std::pow(rho_, n - m());
  }

  /// Point mass P(N = n).
  double mass(int n) const { return tail_prob(n) - tail_prob(n + 1); }

 private:
  void validate() const {
    if (head_.empty()) throw std::invalid_argument("law: empty head");
    if (std::abs(head_.front() - 1.0) > 1e-15) {
      throw std::invalid_argument("law: F_0 must equal 1");
    }
    for (std::size_t n = 0; n < head_.size(); ++n) {
      if (!(head_[n] > 0.0)) throw std::invalid_argument("law: F_n must be > 0");
      if (n + 1 < head_.size() && head_[n] < head_[n + 1]) {
        throw std::invalid_argument("law: head must be non-increasing");
      }
    }
    if (!(rho_ > 0.0) || !(2.0 * rho_ < 1.0)) {
      throw std::invalid_argument(
          "law: tail ratio must lie in (0, 1/2) for finite expected work");
    }
    if (!(p_ > 0.5)) throw std::invalid_argument("law: p must exceed 1/2");
  }

  std::vector<double> head_;
  double rho_;
  double p_;
};

/// Baseline requiring no prior estimation: F_n = 2^{-n(2p+1)/2}.
inline RandomizationLaw subcanonical(double p, int m) {
  if (!(p > 0.5)) throw std::invalid_argument("subcanonical: p must exceed 1/2");
  if (m < 0) throw std::invalid_argument("subcanonical: m must be >= 0");
  const double step = std::pow(2.0, -(2.0 * p + 1.0) / 2.0);
  std::vector<double> head(static_cast<std::size_t>(m) + 1);
  // direct exponentiation keeps dyadic entries (e.g. F_2 = 1/8 at p = 1) exact
  for (int n = 0; n <= m; ++n) {
    head[static_cast<std::size_t>(n)] = std::pow(2.0, -n * (2.0 * p + 1.0) / 2.0);
  }
  return RandomizationLaw(std::move(head), step, p);
}

/// E(tau) = sum_n t_n P(N >= n); head summed directly, geometric tail in
/// closed form: F_m 2^m / (1 - 2 rho).
inline double expected_work(const RandomizationLaw& law) {
  const double two_rho = 2.0 * law.rho();
  if (!(two_rho < 1.0)) throw std::domain_error("expected work diverges");
  double total = 0.0;
  const int m = law.m();
  for (int n = 0; n < m; ++n) total += level_cost(n) * law.head()[static_cast<std::size_t>(n)];
  total += law.head().back() * level_cost(m) / (1.0 - two_rho);
  return total;
}

struct L2Diagnostic {
  bool pass = false;
  double tail_term_ratio = 0.0;  // 2^{-2p} / rho
};

/// Square-summability check for unbiasedness: with E[(Y_n - Y)^2] = O(2^{-2pn})
/// the series sum E[(Y_n - Y)^2]/P(N >= n) converges iff 2^{-2p}/rho < 1.
inline L2Diagnostic check_l2_condition(const RandomizationLaw& law, double p) {
  L2Diagnostic d;
  d.tail_term_ratio = std::pow(2.0, -2.0 * p) / law.rho();
  d.pass = d.tail_term_ratio < 1.0;
  return d;
}

/// Inverse-CDF draw of N from u in [0, 1): N = min{n >= 0 : P(N >= n+1) <= u}.
/// Head by scan, tail via logarithm; capped at kMaxLevel.
inline int sample_level(const RandomizationLaw& law, double u) {
  const int m = law.m();
  for (int n = 0; n < m; ++n) {
    if (law.head()[static_cast<std::size_t>(n) + 1] <= u) return n;
  }
  const double fm = law.head().back();
  if (fm * law.rho() <= u) return m;
  if (u <= 0.0) return kMaxLevel;
  // smallest k >= 1 with F_m rho^k <= u
  const double k = std::ceil(std::log(u / fm) / std::log(law.rho()));
  const int n = m + static_cast<int>(std::max(1.0, k)) - 1;
  return std::min(n, kMaxLevel);
}

}  // namespace unbiased
