// Command-line front end: beta estimation, distribution solving, benchmark
// runs, and re-rendering of saved results. Everything is file-composable so
// the adaptive pipeline can be scripted.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "unbiased/bench.hpp"
#include "unbiased/io.hpp"

namespace {

struct ModelFlags {
  std::string name = "bs";
  double s0 = 1.0;
  double maturity = 1.0;
  double strike = 1.0;
  double r = 0.05;
  double sigma = -1.0;  // model-dependent default
  double k = 1.0;
  double theta = 0.04;
  double alpha = 1.0;
  double beta = 0.06;
  double gamma = 0.5;
  double rho = 0.0;
  double v0 = 0.04;
  double r0 = 0.05;
};

void add_model_flags(CLI::App& cmd, ModelFlags& mf) {
  cmd.add_option("--model", mf.name, "Model: bs|heston|hhw")
      ->check(CLI::IsMember({"bs", "heston", "hhw"}));
  cmd.add_option("--s0", mf.s0, "Initial price");
  cmd.add_option("--maturity", mf.maturity, "Maturity T in years");
  cmd.add_option("--strike", mf.strike, "Call strike K");
  cmd.add_option("--r", mf.r, "Interest rate (bs, heston)");
  cmd.add_option("--sigma", mf.sigma, "Volatility (bs) / vol-of-var (heston, hhw)");
  cmd.add_option("--k", mf.k, "Mean-reversion speed of V (heston, hhw)");
  cmd.add_option("--theta", mf.theta, "Long-run variance level (heston, hhw)");
  cmd.add_option("--alpha", mf.alpha, "Rate mean-reversion speed (hhw)");
  cmd.add_option("--beta", mf.beta, "Long-run rate level (hhw)");
  cmd.add_option("--gamma", mf.gamma, "Rate volatility (hhw)");
  cmd.add_option("--rho", mf.rho, "Price/variance correlation (hhw)");
  cmd.add_option("--v0", mf.v0, "Initial variance (heston, hhw)");
  cmd.add_option("--r0", mf.r0, "Initial rate (hhw)");
}

unbiased::ModelSpec build_model(const ModelFlags& mf) {
  unbiased::ModelSpec spec;
  spec.s0 = mf.s0;
  spec.maturity = mf.maturity;
  spec.strike = mf.strike;
  if (mf.name == "bs") {
    spec.params = unbiased::BlackScholesParams{mf.r, mf.sigma < 0 ? 0.2 : mf.sigma};
  } else if (mf.name == "heston") {
    spec.params = unbiased::HestonParams{mf.r, mf.k, mf.theta,
                                         mf.sigma < 0 ? 0.25 : mf.sigma, mf.v0};
  } else {
    spec.params = unbiased::HestonHullWhiteParams{
        mf.k, mf.theta, mf.sigma < 0 ? 0.25 : mf.sigma, mf.alpha,
        mf.beta, mf.gamma, mf.rho, mf.v0, mf.r0};
  }
  unbiased::validate(spec);
  return spec;
}

int cmd_betas_estimate(const ModelFlags& mf, const std::string& kind_name,
                       int levels, int proxy_level, long samples,
                       std::uint64_t seed, const std::string& out) {
  const unbiased::ModelSpec spec = build_model(mf);
  const unbiased::CouplingKind kind = kind_name == "coupled"
                                          ? unbiased::CouplingKind::coupled
                                          : unbiased::CouplingKind::independent;
  const auto est =
      unbiased::estimate_betas(spec, kind, levels, proxy_level, samples, seed);
  unbiased::save_betas(out, spec, est);
  std::cout << "wrote " << out << " (" << est.series.values.size() << " betas";
  if (!est.series.provenance.clamp_warnings.empty()) {
    std::cout << ", " << est.series.provenance.clamp_warnings.size()
              << " clamped to floor";
  }
  std::cout << ")\n";
  return 0;
}

int cmd_dist_solve(const std::optional<std::string>& betas_path,
                   const std::string& mode, double p, double epsilon, int m_max,
                   int head_len, const std::string& out) {
  const unbiased::DistRequest req = unbiased::parse_dist_request(mode);
  if (req.mode == unbiased::DistMode::subcanonical) {
    unbiased::save_law(out, unbiased::subcanonical(p, head_len));
    std::cout << "wrote " << out << "\n";
    return 0;
  }
  if (!betas_path) {
    std::cerr << "error: --betas is required for mode '" << mode << "'\n";
    return 1;
  }
  const unbiased::BetaCache cache = unbiased::load_betas(*betas_path);
  const auto& beta = cache.series.values;
  if (req.mode == unbiased::DistMode::truncated) {
    if (static_cast<std::size_t>(req.m) + 1 > beta.size()) {
      std::cerr << "error: betas file holds " << beta.size()
                << " values, truncated:" << req.m << " needs " << req.m + 1 << "\n";
      return 1;
    }
    auto [head, blocks] = unbiased::solve_truncated(
        std::span<const double>(beta.data(), static_cast<std::size_t>(req.m) + 1));
    const double rho = std::pow(2.0, -(2.0 * p + 1.0) / 2.0);
    unbiased::save_law(out, unbiased::RandomizationLaw(std::move(head), rho, p));
  } else {
    const int m_cap = std::min<int>(m_max, static_cast<int>(beta.size()) - 2);
    auto [law, report] = unbiased::adaptive_solve(
        [&beta](int n) { return beta.at(static_cast<std::size_t>(n)); }, p,
        epsilon, m_cap);
    unbiased::save_law(out, law, unbiased::to_json(report));
    std::cout << "adaptive m = " << report.adaptive_m
              << (report.hit_m_max ? " (m_max reached, approximate tail)" : "")
              << "\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_bench_run(const std::string& config_path, const std::string& out_dir,
                  std::optional<long> samples_override,
                  std::optional<std::uint64_t> seed_override) {
  unbiased::ExperimentConfig cfg =
      unbiased::config_from_json(unbiased::read_json_file(config_path));
  if (samples_override) cfg.bench_samples = *samples_override;
  if (seed_override) cfg.seed = *seed_override;

  const unbiased::ExperimentResult result = unbiased::run_experiment(cfg);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  unbiased::atomic_write_file(dir / "results.csv", unbiased::to_csv(result));
  unbiased::atomic_write_file(dir / "results.json",
                              unbiased::to_json(result).dump(2) + "\n");
  unbiased::render_table(result, std::cout);
  std::cout << "\nartifacts: " << (dir / "results.csv").string() << ", "
            << (dir / "results.json").string() << "\n";
  return 0;
}

int cmd_report(const std::string& results_path) {
  unbiased::render_saved_results(unbiased::read_json_file(results_path),
                                 std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized unbiased SDE estimators with work-optimal "
               "randomization distributions"};
  app.require_subcommand(1);

  // betas estimate
  auto* betas = app.add_subcommand("betas", "Level-coefficient estimation");
  betas->require_subcommand(1);
  auto* estimate = betas->add_subcommand("estimate",
                                         "Estimate beta_0..beta_M from a proxy-level ladder pool");
  ModelFlags mf;
  std::string kind = "coupled";
  int levels = 8, proxy_level = 10;
  long samples = 0;
  std::uint64_t seed = 1;
  std::string out_file;
  add_model_flags(*estimate, mf);
  estimate->add_option("--kind", kind, "Estimator kind the betas feed")
      ->check(CLI::IsMember({"coupled", "independent"}));
  estimate->add_option("--levels", levels, "Highest level M to estimate");
  estimate->add_option("--proxy-level", proxy_level, "Proxy level standing in for Y");
  estimate->add_option("--samples", samples, "Ladder pool size (0 = kind default)");
  estimate->add_option("--seed", seed, "RNG seed");
  estimate->add_option("--out", out_file, "Output betas JSON")->required();

  // dist solve
  auto* dist = app.add_subcommand("dist", "Randomization distributions");
  dist->require_subcommand(1);
  auto* solve = dist->add_subcommand("solve", "Solve for a randomization distribution");
  std::string betas_path, mode = "adaptive";
  double p = 1.0, epsilon = 0.5;
  int m_max = 10, head_len = 6;
  std::string law_out;
  solve->add_option("--betas", betas_path, "Betas JSON from 'betas estimate'");
  solve->add_option("--mode", mode, "subcanonical | truncated:<m> | adaptive");
  solve->add_option("--p", p, "Strong convergence order");
  solve->add_option("--epsilon", epsilon, "Adaptive stopping tolerance");
  solve->add_option("--m-max", m_max, "Adaptive truncation cap");
  solve->add_option("--head-length", head_len, "Head length for subcanonical mode");
  solve->add_option("--out", law_out, "Output distribution JSON")->required();

  // bench run
  auto* bench = app.add_subcommand("bench", "Benchmark execution");
  bench->require_subcommand(1);
  auto* run = bench->add_subcommand("run", "Run a configured experiment");
  std::string config_path, out_dir;
  std::optional<long> samples_override;
  std::optional<std::uint64_t> seed_override;
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out-dir", out_dir, "Artifact directory")->required();
  run->add_option("--bench-samples", samples_override,
                  "Override the config's benchmark sample count");
  run->add_option("--seed", seed_override, "Override the config's seed");

  // report
  auto* report = app.add_subcommand("report", "Re-render saved results");
  std::string results_path;
  report->add_option("--results", results_path, "results.json from 'bench run'")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed()) {
      if (samples == 0) {
        samples = kind == "coupled" ? unbiased::kDefaultCoupledSamples
                                    : unbiased::kDefaultIndependentSamples;
      }
      return cmd_betas_estimate(mf, kind, levels, proxy_level, samples, seed,
                                out_file);
    }
    if (solve->parsed()) {
      return cmd_dist_solve(betas_path.empty()
                                ? std::nullopt
                                : std::optional<std::string>(betas_path),
                            mode, p, epsilon, m_max, head_len, law_out);
    }
    if (run->parsed()) {
      return cmd_bench_run(config_path, out_dir, samples_override, seed_override);
    }
    if (report->parsed()) {
      return cmd_report(results_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
