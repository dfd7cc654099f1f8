#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

namespace unbiased {

struct BlackScholesParams {
  double r = 0.05;
  double sigma = 0.2;
};

struct HestonParams {
  double r = 0.05;
  double k = 1.0;
  double theta = 0.04;
  double sigma = 0.25;
  double v0 = 0.04;
};

struct HestonHullWhiteParams {
  double k = 3.0;
  double theta = 0.04;
  double sigma = 0.25;
  double alpha = 1.0;
  double beta = 0.06;   // long-run rate level
  double gamma = 0.5;   // rate volatility
  double rho = 0.0;     // price/variance correlation; 0 unless configured
  double v0 = 0.04;
  double r0 = 0.05;
};

/// Model choice plus contract terms for the European call payoff.
struct ModelSpec {
  std::variant<BlackScholesParams, HestonParams, HestonHullWhiteParams> params;
  double s0 = 1.0;
  double maturity = 1.0;
  double strike = 1.0;

  std::string model_id() const {
    if (std::holds_alternative<BlackScholesParams>(params)) return "bs";
    if (std::holds_alternative<HestonParams>(params)) return "heston";
    return "hhw";
  }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("model spec: " + what);
}

inline void check_feller(double k, double theta, double sigma) {
  require(2.0 * k * theta >= sigma * sigma,
          "Feller condition 2*k*theta >= sigma^2 violated");
}

}  // namespace detail

inline void validate(const ModelSpec& spec) {
  detail::require(spec.s0 > 0.0, "s0 must be positive");
  detail::require(spec.maturity > 0.0, "maturity must be positive");
  detail::require(spec.strike > 0.0, "strike must be positive");
  if (const auto* bs = std::get_if<BlackScholesParams>(&spec.params)) {
    detail::require(bs->r >= 0.0 && bs->sigma >= 0.0,
                    "r and sigma must be nonnegative");
  } else if (const auto* h = std::get_if<HestonParams>(&spec.params)) {
    detail::require(h->r >= 0.0 && h->k > 0.0 && h->theta > 0.0 &&
                        h->sigma >= 0.0 && h->v0 >= 0.0,
                    "heston parameters out of range");
    detail::check_feller(h->k, h->theta, h->sigma);
  } else {
    const auto& w = std::get<HestonHullWhiteParams>(spec.params);
    detail::require(w.k > 0.0 && w.theta > 0.0 && w.sigma >= 0.0 &&
                        w.alpha > 0.0 && w.beta > 0.0 && w.gamma >= 0.0 &&
                        w.v0 >= 0.0,
                    "heston-hull-white parameters out of range");
    detail::require(w.rho >= -1.0 && w.rho <= 1.0, "rho must lie in [-1, 1]");
    detail::check_feller(w.k, w.theta, w.sigma);
  }
}

/// Canonical parameter string used for the cache hash; fixed field order and
/// full precision so equal specs hash equally.
inline std::string canonical_params(const ModelSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << spec.model_id() << '|' << spec.s0 << '|' << spec.maturity << '|'
     << spec.strike;
  if (const auto* bs = std::get_if<BlackScholesParams>(&spec.params)) {
    os << '|' << bs->r << '|' << bs->sigma;
  } else if (const auto* h = std::get_if<HestonParams>(&spec.params)) {
    os << '|' << h->r << '|' << h->k << '|' << h->theta << '|' << h->sigma
       << '|' << h->v0;
  } else {
    const auto& w = std::get<HestonHullWhiteParams>(spec.params);
    os << '|' << w.k << '|' << w.theta << '|' << w.sigma << '|' << w.alpha
       << '|' << w.beta << '|' << w.gamma << '|' << w.rho << '|' << w.v0 << '|'
       << w.r0;
  }
  return os.str();
}

/// FNV-1a over the canonical parameter string.
inline std::uint64_t param_hash(const ModelSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_params(spec)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace unbiased
