#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "unbiased/law.hpp"
#include "unbiased/pooling.hpp"
#include "unbiased/solver.hpp"

using namespace unbiased;

namespace {

// Benchmark beta rows used as numeric anchors (Heston coupled run and the
// high-volatility Black-Scholes run that forces pooling).
const std::vector<double> kHestonBetas = {0.0306,  6.19e-4, 1.55e-4, 4.07e-5,
                                          1.09e-5, 2.97e-6, 8.23e-7};
const std::vector<double> kPooledBetas = {12.03, 10.25, 37.99, 8.97,
                                          2.55,  0.71,  0.20};

std::vector<double> random_betas(std::mt19937_64& rng, std::size_t len) {
  std::uniform_real_distribution<double> log_u(-6.0, 2.0);
  std::vector<double> beta(len);
  for (double& b : beta) b = std::pow(10.0, log_u(rng));
  return beta;
}

}  // namespace

TEST_CASE("pooling keeps strictly decreasing candidates as singletons") {
  const std::vector<double> beta = {4.0, 1.0};
  const PooledBlockList pbl = pool_adjacent_violators(beta, 1.0);
  REQUIRE(pbl.blocks.size() == 2);
  CHECK(pbl.blocks[0].left == 0);
  CHECK(pbl.blocks[0].right == 0);
  CHECK_THAT(pbl.blocks[0].value, Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK(pbl.blocks[1].left == 1);
  CHECK(pbl.blocks[1].right == 1);
  CHECK_THAT(pbl.blocks[1].value,
             Catch::Matchers::WithinAbs(std::sqrt(0.5), 1e-12));
}

TEST_CASE("pooling merges on ties") {
  // beta = (1, 2) gives x_0 = x_1 = 1; the tie must merge into one block
  const std::vector<double> beta = {1.0, 2.0};
  const PooledBlockList pbl = pool_adjacent_violators(beta, 1.0);
  REQUIRE(pbl.blocks.size() == 1);
  CHECK(pbl.blocks[0].left == 0);
  CHECK(pbl.blocks[0].right == 1);
  CHECK_THAT(pbl.blocks[0].value, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("pooling rejects bad input") {
  CHECK_THROWS_AS(pool_adjacent_violators(std::vector<double>{1.0, 0.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pool_adjacent_violators(std::vector<double>{1.0, -1.0}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pool_adjacent_violators(std::vector<double>{1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pool_adjacent_violators(std::vector<double>{}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("pooling on the high-volatility beta row") {
  const PooledBlockList pbl = pool_adjacent_violators(kPooledBetas, 1.0);
  REQUIRE(pbl.blocks.size() == 6);
  CHECK(pbl.blocks[0].left == 0);
  CHECK(pbl.blocks[0].right == 0);
  CHECK_THAT(pbl.blocks[0].value, Catch::Matchers::WithinAbs(3.46843, 5e-6));
  CHECK(pbl.blocks[1].left == 1);
  CHECK(pbl.blocks[1].right == 2);
  CHECK_THAT(pbl.blocks[1].value, Catch::Matchers::WithinAbs(2.83549, 5e-6));
  for (std::size_t k = 2; k < pbl.blocks.size(); ++k) {
    CHECK(pbl.blocks[k].left == pbl.blocks[k].right);
  }
}

TEST_CASE("truncated solution reproduces the Heston benchmark row") {
  const auto [f, blocks] = solve_truncated(kHestonBetas);
  const std::vector<double> expected = {1.0,    0.1006, 0.0356, 0.0129,
                                        0.0047, 0.0017, 0.0006};
  REQUIRE(f.size() == expected.size());
  for (std::size_t n = 0; n < f.size(); ++n) {
    CHECK_THAT(f[n], Catch::Matchers::WithinAbs(expected[n], 5e-4));
  }
}

TEST_CASE("truncated solution reproduces the pooled benchmark row") {
  const auto [f, blocks] = solve_truncated(kPooledBetas);
  const std::vector<double> expected = {1.0,    0.8175, 0.8175, 0.3053,
                                        0.1151, 0.0430, 0.0162};
  REQUIRE(f.size() == expected.size());
  for (std::size_t n = 0; n < f.size(); ++n) {
    CHECK_THAT(f[n], Catch::Matchers::WithinAbs(expected[n], 5e-4));
  }
}

TEST_CASE("truncated solution with a single level is F = (1)") {
  const auto [f, blocks] = solve_truncated(std::vector<double>{0.37});
  REQUIRE(f.size() == 1);
  CHECK(f[0] == 1.0);
}

TEST_CASE("tail ratio formula") {
  CHECK_THAT(tail_ratio(6.19e-4, 1.55e-4),
             Catch::Matchers::WithinAbs(0.35384, 5e-6));
  CHECK_THAT(tail_ratio(2.0, 1.0), Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(tail_ratio(4.0, 1.0),
             Catch::Matchers::WithinAbs(std::sqrt(1.0 / 8.0), 1e-15));
  CHECK_THROWS_AS(tail_ratio(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("objective evaluation") {
  CHECK(evaluate_objective(std::vector<double>{1.0}, std::vector<double>{2.0}) ==
        2.0);
  CHECK(evaluate_objective(std::vector<double>{1.0, 1.0},
                           std::vector<double>{1.0, 1.0}) == 6.0);
  CHECK_THROWS_AS(evaluate_objective(std::vector<double>{1.0},
                                     std::vector<double>{1.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("optimizer beats the subcanonical baseline on its own objective") {
  const auto [f_opt, blocks] = solve_truncated(kPooledBetas);
  const RandomizationLaw base = subcanonical(1.0, 6);
  CHECK(evaluate_objective(f_opt, kPooledBetas) <
        evaluate_objective(base.head(), kPooledBetas));
}

TEST_CASE("adaptive stops at m=1 on the Heston beta row") {
  auto source = [](int n) { return kHestonBetas.at(static_cast<std::size_t>(n)); };
  const auto [law, report] = adaptive_solve(source, 1.0, 0.5);
  CHECK(report.adaptive_m == 1);
  CHECK(report.stop_ratio_ok);
  CHECK(report.last_block_singleton);
  CHECK_FALSE(report.hit_m_max);
  CHECK_THAT(report.stop_ratio, Catch::Matchers::WithinAbs(3.994, 5e-3));
  CHECK_THAT(law.rho(), Catch::Matchers::WithinAbs(0.35384, 5e-6));
  CHECK_THAT(law.tail_prob(2), Catch::Matchers::WithinAbs(0.0356, 5e-4));
  // exactly m + 2 betas consumed: one new estimate per iteration
  CHECK(report.betas_used.values.size() == 3);
}

TEST_CASE("adaptive stops immediately on exactly geometric betas") {
  auto source = [](int n) { return std::pow(0.25, n); };
  const auto [law, report] = adaptive_solve(source, 1.0, 0.5);
  CHECK(report.adaptive_m == 1);
  CHECK_THAT(law.rho(),
             Catch::Matchers::WithinAbs(std::sqrt(0.25 / 2.0), 1e-15));
}

TEST_CASE("adaptive trace on the pooled beta row needs m=3") {
  // m=1 fails the ratio gate (10.25/37.99), m=2 passes the gate but ends on
  // the merged block {1,2}, m=3 passes both conditions.
  auto source = [](int n) { return kPooledBetas.at(static_cast<std::size_t>(n)); };
  const auto [law, report] = adaptive_solve(source, 1.0, 0.5);
  CHECK(report.adaptive_m == 3);
  CHECK(report.last_block_singleton);
  CHECK_THAT(report.stop_ratio, Catch::Matchers::WithinAbs(8.97 / 2.55, 1e-12));
  CHECK(law.m() == 3);
  CHECK_THAT(law.head()[1], Catch::Matchers::WithinAbs(0.8175, 5e-4));
  CHECK_THAT(law.head()[3], Catch::Matchers::WithinAbs(0.3053, 5e-4));
}

TEST_CASE("adaptive falls back to the approximate tail at m_max") {
  auto source = [](int) { return 1.0; };  // ratio 1 never passes the gate
  const auto [law, report] = adaptive_solve(source, 1.0, 0.5, 5);
  CHECK(report.hit_m_max);
  CHECK(report.adaptive_m == 5);
  CHECK_THAT(law.rho(), Catch::Matchers::WithinAbs(std::pow(2.0, -1.5), 1e-15));
}

TEST_CASE("adaptive rejects bad arguments and bad sources") {
  auto source = [](int) { return 1.0; };
  CHECK_THROWS_AS(adaptive_solve(source, 0.4, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_solve(source, 1.0, 1.5), std::invalid_argument);
  auto bad = [](int) { return -1.0; };
  CHECK_THROWS_AS(adaptive_solve(bad, 1.0, 0.5), std::domain_error);
}

TEST_CASE("subcanonical law") {
  const RandomizationLaw law = subcanonical(1.0, 6);
  const std::vector<double> expected = {1.0,    0.3536, 0.1250, 0.0442,
                                        0.0156, 0.0055, 0.0020};
  for (std::size_t n = 0; n < expected.size(); ++n) {
    CHECK_THAT(law.head()[n], Catch::Matchers::WithinAbs(expected[n], 5e-5));
  }
  CHECK(law.head()[2] == 0.125);
  CHECK_THAT(subcanonical(1.5, 3).rho(), Catch::Matchers::WithinAbs(0.25, 1e-15));
}

TEST_CASE("expected work closed form") {
  CHECK_THAT(expected_work(RandomizationLaw({1.0, 0.5}, 0.25, 1.0)),
             Catch::Matchers::WithinAbs(3.0, 1e-12));
  CHECK_THAT(expected_work(RandomizationLaw({1.0}, 0.25, 1.0)),
             Catch::Matchers::WithinAbs(2.0, 1e-12));
  CHECK_THAT(expected_work(subcanonical(1.0, 0)),
             Catch::Matchers::WithinAbs(1.0 / (1.0 - std::pow(2.0, -0.5)), 1e-9));
}

TEST_CASE("law construction rejects invalid inputs") {
  CHECK_THROWS_AS(RandomizationLaw({1.0, 0.5}, 0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RandomizationLaw({0.9, 0.5}, 0.25, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RandomizationLaw({1.0, 0.5, 0.6}, 0.25, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RandomizationLaw({1.0, 0.0}, 0.25, 1.0), std::invalid_argument);
}

TEST_CASE("L2 condition diagnostic") {
  const L2Diagnostic pass = check_l2_condition(
      RandomizationLaw({1.0}, 0.35355339059327373, 1.0), 1.0);
  CHECK(pass.pass);
  CHECK_THAT(pass.tail_term_ratio, Catch::Matchers::WithinAbs(0.70711, 5e-5));
  const L2Diagnostic fail =
      check_l2_condition(RandomizationLaw({1.0}, 0.2, 1.0), 1.0);
  CHECK_FALSE(fail.pass);
  CHECK_THAT(fail.tail_term_ratio, Catch::Matchers::WithinAbs(1.25, 1e-12));
  CHECK(check_l2_condition(subcanonical(0.75, 3), 0.75).pass);
}

TEST_CASE("inverse-CDF level draws") {
  const RandomizationLaw law({1.0, 0.5}, 0.25, 1.0);
  CHECK(sample_level(law, 0.6) == 0);
  CHECK(sample_level(law, 0.3) == 1);
  CHECK(sample_level(law, 0.1) == 2);
  CHECK(sample_level(law, 0.0) == kMaxLevel);
  CHECK(sample_level(law, 1.0 - 1e-12) == 0);
}

// --- properties ---

TEST_CASE("mu-invariance of the normalized pooled solution") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> beta = random_betas(rng, 1 + trial % 8);
    std::vector<std::vector<double>> normalized;
    for (double mu : {0.1, 1.0, 10.0}) {
      std::vector<double> f = step_function(pool_adjacent_violators(beta, mu));
      const double f0 = f.front();
      for (double& x : f) x /= f0;
      normalized.push_back(std::move(f));
    }
    for (std::size_t n = 0; n < beta.size(); ++n) {
      CHECK_THAT(normalized[0][n],
                 Catch::Matchers::WithinRel(normalized[1][n], 1e-12));
      CHECK_THAT(normalized[2][n],
                 Catch::Matchers::WithinRel(normalized[1][n], 1e-12));
    }
  }
}

TEST_CASE("block partition invariants hold for random betas") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> beta = random_betas(rng, 1 + trial % 10);
    const PooledBlockList pbl = pool_adjacent_violators(beta, 1.0);
    int expected_left = 0;
    for (std::size_t k = 0; k < pbl.blocks.size(); ++k) {
      const Block& b = pbl.blocks[k];
      CHECK(b.left == expected_left);
      expected_left = b.right + 1;
      double beta_sum = 0.0, cost_sum = 0.0;
      for (int n = b.left; n <= b.right; ++n) {
        beta_sum += beta[static_cast<std::size_t>(n)];
        cost_sum += level_cost(n);
      }
      CHECK_THAT(b.value,
                 Catch::Matchers::WithinRel(std::sqrt(beta_sum / cost_sum), 1e-12));
      if (k > 0) CHECK(pbl.blocks[k - 1].value > b.value);
    }
    CHECK(expected_left == static_cast<int>(beta.size()));
  }
}

TEST_CASE("merged value lies between the two violating block values") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  int merges_seen = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double b0 = u(rng), b1 = u(rng);
    const double x0 = std::sqrt(b0), x1 = std::sqrt(b1 / 2.0);
    if (x0 > x1) continue;
    const PooledBlockList pbl =
        pool_adjacent_violators(std::vector<double>{b0, b1}, 1.0);
    REQUIRE(pbl.blocks.size() == 1);
    CHECK(pbl.blocks[0].value >= x0 - 1e-12);
    CHECK(pbl.blocks[0].value <= x1 + 1e-12);
    ++merges_seen;
  }
  CHECK(merges_seen > 50);
}

TEST_CASE("geometric betas: truncations agree on the prefix, tail is 2^-3/2") {
  std::vector<double> beta(12);
  for (std::size_t n = 0; n < beta.size(); ++n) beta[n] = 0.7 * std::pow(0.25, n);
  for (int m : {2, 4, 6}) {
    const auto [f_m, bm] = solve_truncated(
        std::span<const double>(beta.data(), static_cast<std::size_t>(m) + 1));
    const auto [f_m3, bm3] = solve_truncated(
        std::span<const double>(beta.data(), static_cast<std::size_t>(m) + 4));
    for (int n = 0; n <= m; ++n) {
      CHECK_THAT(f_m3[static_cast<std::size_t>(n)],
                 Catch::Matchers::WithinRel(f_m[static_cast<std::size_t>(n)], 1e-12));
    }
    for (int n = m; n < m + 3; ++n) {
      const double step = f_m3[static_cast<std::size_t>(n) + 1] /
                          f_m3[static_cast<std::size_t>(n)];
      CHECK_THAT(step, Catch::Matchers::WithinAbs(std::pow(2.0, -1.5), 1e-12));
      CHECK_THAT(step, Catch::Matchers::WithinAbs(
                           tail_ratio(beta[static_cast<std::size_t>(n)],
                                      beta[static_cast<std::size_t>(n) + 1]),
                           1e-12));
    }
  }
}

TEST_CASE("non-singleton final block becomes singleton one level later") {
  std::mt19937_64 rng(17);
  int applicable = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> beta = random_betas(rng, 3 + trial % 6);
    const std::size_t m = beta.size() - 2;
    if (!(beta[m] > beta[m + 1])) continue;
    const auto [f_m, blocks_m] =
        solve_truncated(std::span<const double>(beta.data(), m + 1));
    if (blocks_m.last_is_singleton()) continue;
    const auto [f_m1, blocks_m1] =
        solve_truncated(std::span<const double>(beta.data(), m + 2));
    CHECK(blocks_m1.last_is_singleton());
    ++applicable;
  }
  CHECK(applicable > 50);
}

TEST_CASE("solver matches the convex-dual descent oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const std::vector<double> beta = random_betas(rng, 2 + trial % 4);
    const auto [f, blocks] = solve_truncated(beta);
    const double g_solver = evaluate_objective(f, beta);
    const double g_oracle = oracle::projected_descent_min(beta);
    CHECK(g_solver <= g_oracle * (1.0 + 1e-6));
    CHECK_THAT(g_solver, Catch::Matchers::WithinRel(g_oracle, 1e-6));
  }
}

TEST_CASE("solver is never beaten on a dense feasible grid") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 12; ++trial) {
    const std::vector<double> beta = random_betas(rng, 2 + trial % 2);
    const auto [f, blocks] = solve_truncated(beta);
    const double g_solver = evaluate_objective(f, beta);
    const double g_grid = oracle::grid_min_objective(beta, 200);
    CHECK(g_solver <= g_grid + 1e-9);
  }
}
