#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "unbiased/estimators.hpp"
#include "unbiased/io.hpp"
#include "unbiased/law.hpp"
#include "unbiased/solver.hpp"
#include "unbiased/variance.hpp"

namespace unbiased {

enum class DistMode { subcanonical, truncated, adaptive };

struct DistRequest {
  DistMode mode = DistMode::subcanonical;
  int m = 7;  // truncated mode only

  std::string label() const {
    switch (mode) {
      case DistMode::subcanonical: return "subcanonical";
      case DistMode::truncated: return "truncated" + std::to_string(m);
      case DistMode::adaptive: return "adaptive";
    }
    return "?";
  }
};

inline DistRequest parse_dist_request(const std::string& text) {
  DistRequest req;
  if (text == "subcanonical") {
    req.mode = DistMode::subcanonical;
  } else if (text == "adaptive") {
    req.mode = DistMode::adaptive;
  } else if (text.rfind("truncated:", 0) == 0) {
    req.mode = DistMode::truncated;
    const std::string tail = text.substr(10);
    try {
      req.m = std::stoi(tail);
    } catch (const std::exception&) {
      throw std::invalid_argument("distribution '" + text + "': bad truncation level");
    }
    if (req.m < 0) throw std::invalid_argument("distribution '" + text + "': m must be >= 0");
  } else {
    throw std::invalid_argument(
        "distribution '" + text +
        "': expected subcanonical | truncated:<m> | adaptive");
  }
  return req;
}

struct ExperimentConfig {
  ModelSpec model;
  EstimatorKind estimator = EstimatorKind::coupled_sum;
  std::vector<DistRequest> distributions;
  double p = 1.0;
  double epsilon = 0.5;
  int m_max = 10;
  long prior_samples = kDefaultCoupledSamples;
  int proxy_level = kDefaultProxyLevel;
  long bench_samples = 1'000'000;
  std::uint64_t seed = 0;
  std::optional<std::string> betas_cache;  // reuse instead of estimating
};

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (!j.contains("model")) throw std::invalid_argument("config: missing field 'model'");
  cfg.model = model_spec_from_json(j.at("model"));
  const std::string est = j.value("estimator", std::string("coupled"));
  if (est == "coupled") {
    cfg.estimator = EstimatorKind::coupled_sum;
  } else if (est == "independent") {
    cfg.estimator = EstimatorKind::independent_sum;
  } else {
    throw std::invalid_argument("config: 'estimator' must be coupled|independent");
  }
  if (!j.contains("distributions") || !j.at("distributions").is_array() ||
      j.at("distributions").empty()) {
    throw std::invalid_argument("config: 'distributions' must be a non-empty array");
  }
  for (const auto& d : j.at("distributions")) {
    cfg.distributions.push_back(parse_dist_request(d.get<std::string>()));
  }
  cfg.p = j.value("p", 1.0);
  cfg.epsilon = j.value("epsilon", 0.5);
  cfg.m_max = j.value("m_max", 10);
  if (j.contains("prior")) {
    const json& prior = j.at("prior");
    cfg.prior_samples = prior.value("samples", cfg.prior_samples);
    cfg.proxy_level = prior.value("proxy_level", cfg.proxy_level);
  }
  cfg.bench_samples = j.value("bench_samples", cfg.bench_samples);
  if (!j.contains("seed")) {
    throw std::invalid_argument("config: missing field 'seed' (reproducibility is mandatory)");
  }
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("betas_cache")) cfg.betas_cache = j.at("betas_cache").get<std::string>();
  return cfg;
}

struct DistRow {
  std::string name;
  std::optional<int> m;  // empty for subcanonical
  RandomizationLaw law;
  json report;  // solver report, adaptive only
  BenchResult bench;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::optional<BetaEstimationResult> betas;
  std::vector<DistRow> rows;
};

namespace detail {

inline CouplingKind coupling_of(EstimatorKind k) {
  return k == EstimatorKind::coupled_sum ? CouplingKind::coupled
                                         : CouplingKind::independent;
}

}  // namespace detail

/// Full pipeline: estimate or load betas where needed, solve each requested
/// distribution, run one benchmark batch per distribution.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg.model);
  if (cfg.distributions.empty()) {
    throw std::invalid_argument("config: at least one distribution is required");
  }

  ExperimentResult result;
  result.config = cfg;

  bool needs_betas = false;
  int max_truncated = 0;
  for (const DistRequest& req : cfg.distributions) {
    if (req.mode != DistMode::subcanonical) needs_betas = true;
    if (req.mode == DistMode::truncated) max_truncated = std::max(max_truncated, req.m);
  }

  if (needs_betas) {
    if (cfg.betas_cache) {
      BetaCache cache = load_betas(*cfg.betas_cache);
      require_cache_match(cache, cfg.model);
      BetaEstimationResult est;
      est.series = cache.series;
      est.v = cache.v;
      result.betas = std::move(est);
    } else {
      const int max_level =
          std::max(max_truncated + 1, std::min(cfg.m_max + 1, cfg.proxy_level - 1));
      result.betas = estimate_betas(cfg.model, detail::coupling_of(cfg.estimator),
                                    max_level, cfg.proxy_level, cfg.prior_samples,
                                    cfg.seed);
    }
  }

  const double head_step = std::pow(2.0, -(2.0 * cfg.p + 1.0) / 2.0);
  for (const DistRequest& req : cfg.distributions) {
    std::optional<DistRow> row;
    switch (req.mode) {
      case DistMode::subcanonical: {
        row = DistRow{req.label(), std::nullopt, subcanonical(cfg.p, 6), {}, {}};
        break;
      }
      case DistMode::truncated: {
        const auto& beta = result.betas->series.values;
        if (static_cast<std::size_t>(req.m) + 1 > beta.size()) {
          throw std::invalid_argument("truncated:" + std::to_string(req.m) +
                                      " needs more betas than available (" +
                                      std::to_string(beta.size()) + ")");
        }
        auto [head, blocks] = solve_truncated(
            std::span<const double>(beta.data(), static_cast<std::size_t>(req.m) + 1));
        // tail continues with the order-p approximation, as no beta estimates
        // beyond the truncation point are consulted
        row = DistRow{req.label(), req.m,
                      RandomizationLaw(std::move(head), head_step, cfg.p), {}, {}};
        break;
      }
      case DistMode::adaptive: {
        const auto& beta = result.betas->series.values;
        const int m_cap =
            std::min<int>(cfg.m_max, static_cast<int>(beta.size()) - 2);
        auto source = [&beta](int n) {
          return beta.at(static_cast<std::size_t>(n));
        };
        auto [law, rep] = adaptive_solve(source, cfg.p, cfg.epsilon, m_cap);
        row = DistRow{req.label(), rep.adaptive_m, std::move(law), to_json(rep), {}};
        break;
      }
    }
    // re-validated here: constructing RandomizationLaw enforces the invariants
    row->bench = run_batch(cfg.estimator, row->law, cfg.model,
                           cfg.bench_samples, cfg.seed + 1);
    result.rows.push_back(std::move(*row));
  }
  return result;
}

// --- rendering ---

inline std::string format_sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << x;
  return os.str();
}

/// Human-readable table mirroring the benchmark layout: one row per
/// distribution with m/var/time/work columns, then the beta row and the
/// distribution heads for n = 0..6 at four decimals. Full precision lives in
/// the CSV/JSON artifacts only.
inline void render_table(const ExperimentResult& result, std::ostream& os) {
  os << "estimator: " << to_string(result.config.estimator)
     << "   model: " << result.config.model.model_id()
     << "   samples: " << result.config.bench_samples << "\n\n";
  os << std::left << std::setw(14) << "dist" << std::setw(6) << "m"
     << std::setw(12) << "var" << std::setw(10) << "time" << std::setw(10)
     << "work" << std::setw(12) << "var*time" << std::setw(12) << "var*work"
     << "\n";
  for (const DistRow& row : result.rows) {
    os << std::left << std::setw(14) << row.name << std::setw(6)
       << (row.m ? std::to_string(*row.m) : "-") << std::setw(12)
       << format_sci(row.bench.variance_of_mean) << std::setw(10) << std::fixed
       << std::setprecision(2) << row.bench.wall_time_s << std::setw(10)
       << std::setprecision(3) << row.bench.mean_work_units << std::setw(12)
       << format_sci(row.bench.var_time_product) << std::setw(12)
       << format_sci(row.bench.var_work_product) << "\n";
  }
  os << "\n" << std::left << std::setw(14) << "n";
  for (int n = 0; n <= 6; ++n) os << std::setw(10) << n;
  os << "\n";
  if (result.betas) {
    os << std::left << std::setw(14) << "beta";
    const auto& beta = result.betas->series.values;
    for (int n = 0; n <= 6; ++n) {
      if (static_cast<std::size_t>(n) < beta.size()) {
        os << std::setw(10) << format_sci(beta[static_cast<std::size_t>(n)]);
      } else {
        os << std::setw(10) << "-";
      }
    }
    os << "\n";
  }
  for (const DistRow& row : result.rows) {
    os << std::left << std::setw(14) << row.name;
    for (int n = 0; n <= 6; ++n) {
      os << std::setw(10) << std::fixed << std::setprecision(4)
         << row.law.tail_prob(n);
    }
    os << "\n";
  }
  os.unsetf(std::ios::fixed);
}

inline constexpr const char* kCsvHeader =
    "dist,m,n_samples,mean,var_of_mean,wall_time_s,mean_work,var_x_time,var_x_work";

inline std::string to_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << kCsvHeader << "\n";
  for (const DistRow& row : result.rows) {
    os << row.name << ',' << (row.m ? std::to_string(*row.m) : "") << ','
       << row.bench.n_samples << ',' << row.bench.mean << ','
       << row.bench.variance_of_mean << ',' << row.bench.wall_time_s << ','
       << row.bench.mean_work_units << ',' << row.bench.var_time_product << ','
       << row.bench.var_work_product << "\n";
  }
  return os.str();
}

inline json to_json(const ExperimentResult& result) {
  json rows = json::array();
  for (const DistRow& row : result.rows) {
    rows.push_back({{"dist", row.name},
                    {"m", row.m ? json(*row.m) : json(nullptr)},
                    {"law",
                     {{"m", row.law.m()},
                      {"p", row.law.p()},
                      {"head", row.law.head()},
                      {"tail_ratio", row.law.rho()}}},
                    {"report", row.report},
                    {"bench",
                     {{"n_samples", row.bench.n_samples},
                      {"mean", row.bench.mean},
                      {"var_of_mean", row.bench.variance_of_mean},
                      {"wall_time_s", row.bench.wall_time_s},
                      {"mean_work", row.bench.mean_work_units},
                      {"var_x_time", row.bench.var_time_product},
                      {"var_x_work", row.bench.var_work_product},
                      {"level_cap_hits", row.bench.level_cap_hits}}}});
  }
  json j = {{"model", to_json(result.config.model)},
            {"estimator", to_string(result.config.estimator)},
            {"bench_samples", result.config.bench_samples},
            {"seed", result.config.seed},
            {"p", result.config.p},
            {"rows", rows}};
  if (result.betas) {
    j["betas"] = result.betas->series.values;
    j["v"] = result.betas->v;
    j["mean_y"] = result.betas->series.mean_y;
  }
  return j;
}

/// Re-render a saved results.json as the human table.
inline void render_saved_results(const json& j, std::ostream& os) {
  ExperimentResult result;
  result.config.model = model_spec_from_json(j.at("model"));
  result.config.estimator = j.at("estimator").get<std::string>() == "coupled"
                                ? EstimatorKind::coupled_sum
                                : EstimatorKind::independent_sum;
  result.config.bench_samples = j.at("bench_samples").get<long>();
  result.config.seed = j.at("seed").get<std::uint64_t>();
  result.config.p = j.value("p", 1.0);
  if (j.contains("betas")) {
    BetaEstimationResult est;
    est.series.values = j.at("betas").get<std::vector<double>>();
    est.series.mean_y = j.value("mean_y", 0.0);
    est.v = j.value("v", std::vector<double>{});
    result.betas = std::move(est);
  }
  for (const auto& r : j.at("rows")) {
    DistRow row{r.at("dist").get<std::string>(),
                r.at("m").is_null() ? std::nullopt
                                    : std::optional<int>(r.at("m").get<int>()),
                RandomizationLaw(r.at("law").at("head").get<std::vector<double>>(),
                                 r.at("law").at("tail_ratio").get<double>(),
                                 r.at("law").at("p").get<double>()),
                r.value("report", json{}),
                {}};
    const json& b = r.at("bench");
    row.bench.n_samples = b.at("n_samples").get<long>();
    row.bench.mean = b.at("mean").get<double>();
    row.bench.variance_of_mean = b.at("var_of_mean").get<double>();
    row.bench.wall_time_s = b.at("wall_time_s").get<double>();
    row.bench.mean_work_units = b.at("mean_work").get<double>();
    row.bench.var_time_product = b.at("var_x_time").get<double>();
    row.bench.var_work_product = b.at("var_x_work").get<double>();
    result.rows.push_back(std::move(row));
  }
  render_table(result, os);
}

}  // namespace unbiased
