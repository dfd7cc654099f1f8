#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "unbiased/models.hpp"
#include "unbiased/solver.hpp"
#include "unbiased/variance.hpp"

namespace unbiased {

using nlohmann::json;

/// Whole-file atomic write: temp file in the same directory, then rename.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

// --- model spec <-> json ---

inline json to_json(const ModelSpec& spec) {
  json params;
  if (const auto* bs = std::get_if<BlackScholesParams>(&spec.params)) {
    params = {{"r", bs->r}, {"sigma", bs->sigma}};
  } else if (const auto* h = std::get_if<HestonParams>(&spec.params)) {
    params = {{"r", h->r}, {"k", h->k}, {"theta", h->theta},
              {"sigma", h->sigma}, {"v0", h->v0}};
  } else {
    const auto& w = std::get<HestonHullWhiteParams>(spec.params);
    params = {{"k", w.k},       {"theta", w.theta}, {"sigma", w.sigma},
              {"alpha", w.alpha}, {"beta", w.beta},   {"gamma", w.gamma},
              {"rho", w.rho},   {"v0", w.v0},       {"r0", w.r0}};
  }
  return {{"name", spec.model_id()},
          {"s0", spec.s0},
          {"maturity", spec.maturity},
          {"strike", spec.strike},
          {"params", params}};
}

inline ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  const std::string name = j.at("name").get<std::string>();
  spec.s0 = j.value("s0", 1.0);
  spec.maturity = j.value("maturity", 1.0);
  spec.strike = j.value("strike", 1.0);
  const json& p = j.at("params");
  if (name == "bs") {
    spec.params = BlackScholesParams{p.at("r"), p.at("sigma")};
  } else if (name == "heston") {
    spec.params = HestonParams{p.at("r"), p.at("k"), p.at("theta"),
                               p.at("sigma"), p.at("v0")};
  } else if (name == "hhw") {
    spec.params = HestonHullWhiteParams{
        p.at("k"),     p.at("theta"),      p.at("sigma"),
        p.at("alpha"), p.at("beta"),       p.at("gamma"),
        p.value("rho", 0.0), p.at("v0"),   p.at("r0")};
  } else {
    throw std::runtime_error("unknown model name: " + name);
  }
  validate(spec);
  return spec;
}

// --- beta cache ---

struct BetaCache {
  ModelSpec spec;
  BetaSeries series;
  std::vector<double> v;
};

inline void save_betas(const std::filesystem::path& path, const ModelSpec& spec,
                       const BetaEstimationResult& est) {
  json j = {{"model", spec.model_id()},
            {"params", to_json(spec)},
            {"param_hash", est.series.provenance.param_hash},
            {"kind", to_string(est.series.kind)},
            {"proxy_level", est.series.provenance.proxy_level},
            {"samples", est.series.provenance.samples_per_level},
            {"seed", est.series.provenance.rng_seed},
            {"mean_y", est.series.mean_y},
            {"v", est.v},
            {"betas", est.series.values},
            {"clamp_warnings", est.series.provenance.clamp_warnings}};
  atomic_write_file(path, j.dump(2) + "\n");
}

inline BetaCache load_betas(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  BetaCache cache;
  cache.spec = model_spec_from_json(j.at("params"));
  cache.series.values = j.at("betas").get<std::vector<double>>();
  if (cache.series.values.size() < 2) {
    throw std::runtime_error(path.string() +
                             ": field 'betas' must hold at least 2 values");
  }
  cache.series.mean_y = j.at("mean_y").get<double>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "coupled" && kind != "independent") {
    throw std::runtime_error(path.string() + ": field 'kind' must be coupled|independent");
  }
  cache.series.kind =
      kind == "coupled" ? CouplingKind::coupled : CouplingKind::independent;
  cache.series.provenance.model_id = j.at("model").get<std::string>();
  cache.series.provenance.param_hash = j.at("param_hash").get<std::uint64_t>();
  cache.series.provenance.proxy_level = j.at("proxy_level").get<int>();
  cache.series.provenance.samples_per_level = j.at("samples").get<long>();
  cache.series.provenance.rng_seed = j.at("seed").get<std::uint64_t>();
  cache.series.provenance.clamp_warnings =
      j.value("clamp_warnings", std::vector<int>{});
  cache.v = j.value("v", std::vector<double>{});
  if (cache.series.provenance.param_hash != param_hash(cache.spec)) {
    throw std::runtime_error(path.string() +
                             ": field 'param_hash' does not match 'params'");
  }
  return cache;
}

/// Guard against reusing betas estimated for a different model.
inline void require_cache_match(const BetaCache& cache, const ModelSpec& spec) {
  if (cache.series.provenance.param_hash != param_hash(spec)) {
    throw std::runtime_error(
        "stale beta cache: parameter hash mismatch (cache is for model '" +
        cache.spec.model_id() + "', params " + canonical_params(cache.spec) +
        ")");
  }
}

// --- randomization law ---

inline json to_json(const SolverReport& report) {
  json blocks = json::array();
  for (const Block& b : report.blocks.blocks) {
    blocks.push_back({{"L", b.left}, {"R", b.right}, {"V", b.value}});
  }
  return {{"adaptive_m", report.adaptive_m},
          {"blocks", blocks},
          {"stop_ratio", report.stop_ratio},
          {"stop_ratio_ok", report.stop_ratio_ok},
          {"last_block_singleton", report.last_block_singleton},
          {"hit_m_max", report.hit_m_max},
          {"betas_used", report.betas_used.values}};
}

inline void save_law(const std::filesystem::path& path,
                     const RandomizationLaw& law, const json& report = {}) {
  json j = {{"m", law.m()},
            {"p", law.p()},
            {"head", law.head()},
            {"tail_ratio", law.rho()},
            {"report", report}};
  atomic_write_file(path, j.dump(2) + "\n");
}

inline RandomizationLaw load_law(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  return RandomizationLaw(j.at("head").get<std::vector<double>>(),
                          j.at("tail_ratio").get<double>(),
                          j.at("p").get<double>());
}

}  // namespace unbiased
