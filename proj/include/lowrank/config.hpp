#pragma once

// JSON schemas for problem specs, solver configs and run summaries.
//
// Spec:
//   {"m": 100, "n": 100, "rank": 5, "seed": 1,
//    "noise":   {"type": "additive_gaussian", "sigma": 1.0}
//             | {"type": "gaussian_scaled", "eta_factor": 0.2, "alpha": 0.1}   (alpha optional)
//             | {"type": "sparse_large", "alpha": 0.1, "low": -50, "high": 50},
//    "weights": {"type": "all_ones"}
//             | {"type": "uniform_int", "w_min": 5, "w_max": 10}
//             | {"type": "large_on_support", "alpha": 0.1, "w_min": 5, "w_max": 10},
//    "mask":    0.5 | {"fraction": 0.5, "exact_count": false}                    (optional)
//    "sensing": {"measurements": 2352}}                                          (optional)
//
// Run config:
//   {"tau": 1.5 | "noise_norm" | "2*noise_norm",
//    "seed": 1,
//    "gamma": 0.9,                                          (optional, default 1/L)
//    "rule":  {"type": "zero"} | {"type": "constant", "a": 0.25}
//           | {"type": "fista", "d": 20} | {"type": "online", "a": 0.5, "c": 1, "delta": 1},
//    "inner": {"type": "fixed", "passes": 1} | {"type": "tolerance", "eps": 1e-4, "max_passes": 20}
//           | {"type": "increasing", "start": 1, "every": 50},
//    "r": 200,
//    "continuation": {"burn_in": 20, "cadence": 10, "rank_tol": 1e-8},
//    "stop": {"step_tol": 1e-10, "max_iter": 1000, "relative": false},
//    "trace_level": "light" | "full",
//    "rank_tol": 1e-8,
//    "probe_exact_prox": false}
// Every field except tau has a default. Whether continuation runs is decided by
// the algorithm name (prograamme-rc), not by the config.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "json.hpp"
#include "lowrank/problems.hpp"
#include "lowrank/solver.hpp"

namespace lowrank {

using Json = nlohmann::ordered_json;

enum class TauPreset { noise_norm, twice_noise_norm };

struct TauSetting {
  std::variant<double, TauPreset> value = 1.0;

  /// Resolves presets against the generator's stored noise.
  double resolve(double noise_norm) const {
    if (const auto* v = std::get_if<double>(&value)) return *v;
    const double out = std::get<TauPreset>(value) == TauPreset::noise_norm ? noise_norm : 2.0 * noise_norm;
    if (!(out > 0.0)) throw InvalidSpecError("tau preset resolves to " + std::to_string(out) + "; the noise is zero");
    return out;
  }
};

struct RunConfig {
  TauSetting tau;
  std::uint64_t seed = 0;
  SolverConfig solver;
};

namespace json_detail {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

inline const Json& require(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw InvalidSpecError(std::string(what) + ": missing field '" + key + "'");
  return j.at(key);
}

inline std::string type_of(const Json& j, const char* what) {
  return require(j, "type", what).get<std::string>();
}

}  // namespace json_detail

// ---------------------------------------------------------------------------
// Spec

inline Json to_json(const NoiseModel& noise) {
  return std::visit(
      [](const auto& nz) -> Json {
        using T = std::decay_t<decltype(nz)>;
        if constexpr (std::is_same_v<T, GaussianScaledNoise>) {
          Json j{{"type", "gaussian_scaled"}, {"eta_factor", nz.eta_factor}};
          if (nz.alpha) j["alpha"] = *nz.alpha;
          return j;
        } else if constexpr (std::is_same_v<T, SparseLargeNoise>) {
          return {{"type", "sparse_large"}, {"alpha", nz.alpha}, {"low", nz.low}, {"high", nz.high}};
        } else {
          return {{"type", "additive_gaussian"}, {"sigma", nz.sigma}};
        }
      },
      noise);
}

inline Json to_json(const WeightModel& weights) {
  return std::visit(
      [](const auto& w) -> Json {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, AllOnesWeights>) {
          return {{"type", "all_ones"}};
        } else if constexpr (std::is_same_v<T, UniformIntWeights>) {
          return {{"type", "uniform_int"}, {"w_min", w.w_min}, {"w_max", w.w_max}};
        } else {
          return {{"type", "large_on_support"}, {"alpha", w.alpha}, {"w_min", w.w_min}, {"w_max", w.w_max}};
        }
      },
      weights);
}

inline Json to_json(const SyntheticSpec& s) {
  Json j{{"m", s.m}, {"n", s.n}, {"rank", s.rank}, {"seed", s.seed}, {"noise", to_json(s.noise)},
         {"weights", to_json(s.weights)}};
  if (s.mask) j["mask"] = Json{{"fraction", s.mask->fraction}, {"exact_count", s.mask->exact_count}};
  if (s.sensing) j["sensing"] = Json{{"measurements", s.sensing->measurements}};
  return j;
}

inline NoiseModel noise_from_json(const Json& j) {
  using json_detail::get_or;
  const std::string type = json_detail::type_of(j, "noise");
  if (type == "gaussian_scaled") {
    GaussianScaledNoise nz;
    nz.eta_factor = get_or(j, "eta_factor", nz.eta_factor);
    if (j.contains("alpha") && !j.at("alpha").is_null()) nz.alpha = j.at("alpha").get<double>();
    return nz;
  }
  if (type == "sparse_large") {
    SparseLargeNoise nz;
    nz.alpha = get_or(j, "alpha", nz.alpha);
    nz.low = get_or(j, "low", nz.low);
    nz.high = get_or(j, "high", nz.high);
    return nz;
  }
  if (type == "additive_gaussian") return AdditiveGaussianNoise{get_or(j, "sigma", 1.0)};
  throw InvalidSpecError("noise: unknown type '" + type + "'");
}

inline WeightModel weights_from_json(const Json& j) {
  using json_detail::get_or;
  const std::string type = json_detail::type_of(j, "weights");
  if (type == "all_ones") return AllOnesWeights{};
  if (type == "uniform_int") {
    UniformIntWeights w;
    w.w_min = get_or(j, "w_min", w.w_min);
    w.w_max = get_or(j, "w_max", w.w_max);
    return w;
  }
  if (type == "large_on_support") {
    LargeOnSupportWeights w;
    w.alpha = get_or(j, "alpha", w.alpha);
    w.w_min = get_or(j, "w_min", w.w_min);
    w.w_max = get_or(j, "w_max", w.w_max);
    return w;
  }
  throw InvalidSpecError("weights: unknown type '" + type + "'");
}

inline SyntheticSpec spec_from_json(const Json& j) {
  using json_detail::get_or;
  using json_detail::require;
  try {
    SyntheticSpec s;
    s.m = require(j, "m", "spec").get<Index>();
    s.n = require(j, "n", "spec").get<Index>();
    s.rank = require(j, "rank", "spec").get<Index>();
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("noise")) s.noise = noise_from_json(j.at("noise"));
    if (j.contains("weights")) s.weights = weights_from_json(j.at("weights"));
    if (j.contains("mask") && !j.at("mask").is_null()) {
      const Json& mj = j.at("mask");
      MaskSpec mask;
      if (mj.is_number()) {
        mask.fraction = mj.get<double>();
      } else {
        mask.fraction = require(mj, "fraction", "mask").get<double>();
        mask.exact_count = get_or(mj, "exact_count", false);
      }
      s.mask = mask;
    }
    if (j.contains("sensing") && !j.at("sensing").is_null()) {
      s.sensing = SensingSpec{require(j.at("sensing"), "measurements", "sensing").get<Index>()};
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpecError(std::string("spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run config

inline Json to_json(const InertialRule& rule) {
  return std::visit(
      [](const auto& r) -> Json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ZeroInertia>) return {{"type", "zero"}};
        else if constexpr (std::is_same_v<T, ConstantInertia>) return {{"type", "constant"}, {"a", r.a}};
        else if constexpr (std::is_same_v<T, FistaInertia>) return {{"type", "fista"}, {"d", r.d}};
        else return {{"type", "online"}, {"a", r.a}, {"c", r.c}, {"delta", r.delta}};
      },
      rule);
}

inline Json to_json(const InnerPolicy& policy) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FixedPasses>) return {{"type", "fixed"}, {"passes", p.passes}};
        else if constexpr (std::is_same_v<T, ToleranceStop>)
          return {{"type", "tolerance"}, {"eps", p.eps}, {"max_passes", p.max_passes}};
        else return {{"type", "increasing"}, {"start", p.start}, {"every", p.every}};
      },
      policy);
}

inline std::string to_string(TraceLevel level) { return level == TraceLevel::full ? "full" : "light"; }

inline TraceLevel trace_level_from_string(const std::string& s) {
  if (s == "light") return TraceLevel::light;
  if (s == "full") return TraceLevel::full;
  throw InvalidSpecError("trace_level must be 'light' or 'full', got '" + s + "'");
}

inline Json to_json(const SolverConfig& c) {
  Json j;
  j["gamma"] = c.gamma ? Json(*c.gamma) : Json(nullptr);
  j["rule"] = to_json(c.rule);
  j["inner"] = to_json(c.inner);
  j["r"] = c.r;
  j["continuation"] = {{"enabled", c.continuation.enabled},
                       {"burn_in", c.continuation.burn_in},
                       {"cadence", c.continuation.cadence},
                       {"rank_tol", c.continuation.rank_tol}};
  j["stop"] = {{"step_tol", c.stop.step_tol}, {"max_iter", c.stop.max_iter}, {"relative", c.stop.relative}};
  j["trace_level"] = to_string(c.trace_level);
  j["rank_tol"] = c.rank_tol;
  j["probe_exact_prox"] = c.probe_exact_prox;
  return j;
}

inline Json to_json(const TauSetting& tau) {
  if (const auto* v = std::get_if<double>(&tau.value)) return *v;
  return std::get<TauPreset>(tau.value) == TauPreset::noise_norm ? "noise_norm" : "2*noise_norm";
}

inline Json to_json(const RunConfig& c) {
  Json j{{"tau", to_json(c.tau)}, {"seed", c.seed}};
  const Json solver = to_json(c.solver);
  for (const auto& [key, value] : solver.items()) j[key] = value;
  return j;
}

inline InertialRule rule_from_json(const Json& j) {
  using json_detail::get_or;
  const std::string type = json_detail::type_of(j, "rule");
  if (type == "zero") return ZeroInertia{};
  if (type == "constant") return ConstantInertia{json_detail::require(j, "a", "rule").get<double>()};
  if (type == "fista") return FistaInertia{get_or(j, "d", 20.0)};
  if (type == "online") {
    OnlineInertia r;
    r.a = get_or(j, "a", r.a);
    r.c = get_or(j, "c", r.c);
    r.delta = get_or(j, "delta", r.delta);
    return r;
  }
  throw InvalidSpecError("rule: unknown type '" + type + "'");
}

inline InnerPolicy inner_from_json(const Json& j) {
  using json_detail::get_or;
  const std::string type = json_detail::type_of(j, "inner");
  if (type == "fixed") return FixedPasses{get_or(j, "passes", 1)};
  if (type == "tolerance") return ToleranceStop{get_or(j, "eps", 1e-4), get_or(j, "max_passes", 20)};
  if (type == "increasing") return IncreasingPasses{get_or(j, "start", 1), get_or(j, "every", 50)};
  throw InvalidSpecError("inner: unknown type '" + type + "'");
}

inline TauSetting tau_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "noise_norm") return {TauPreset::noise_norm};
    if (s == "2*noise_norm") return {TauPreset::twice_noise_norm};
    throw InvalidSpecError("tau: unknown preset '" + s + "' (expected noise_norm or 2*noise_norm)");
  }
  throw InvalidSpecError("tau must be a number or a preset name");
}

inline RunConfig run_config_from_json(const Json& j) {
  using json_detail::get_or;
  try {
    RunConfig c;
    c.tau = tau_from_json(json_detail::require(j, "tau", "config"));
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    SolverConfig& s = c.solver;
    if (j.contains("gamma") && !j.at("gamma").is_null()) s.gamma = j.at("gamma").get<double>();
    if (j.contains("rule")) s.rule = rule_from_json(j.at("rule"));
    if (j.contains("inner")) s.inner = inner_from_json(j.at("inner"));
    s.r = get_or<Index>(j, "r", s.r);
    if (j.contains("continuation")) {
      const Json& cj = j.at("continuation");
      s.continuation.burn_in = get_or(cj, "burn_in", s.continuation.burn_in);
      s.continuation.cadence = get_or(cj, "cadence", s.continuation.cadence);
      s.continuation.rank_tol = get_or(cj, "rank_tol", s.continuation.rank_tol);
    }
    if (j.contains("stop")) {
      const Json& sj = j.at("stop");
      s.stop.step_tol = get_or(sj, "step_tol", s.stop.step_tol);
      s.stop.max_iter = get_or(sj, "max_iter", s.stop.max_iter);
      s.stop.relative = get_or(sj, "relative", s.stop.relative);
    }
    if (j.contains("trace_level")) s.trace_level = trace_level_from_string(j.at("trace_level").get<std::string>());
    s.rank_tol = get_or(j, "rank_tol", s.rank_tol);
    s.probe_exact_prox = get_or(j, "probe_exact_prox", s.probe_exact_prox);
    validate(s);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpecError(std::string("config: ") + e.what());
  }
}

inline Json parse_json(const std::string& text, const std::string& context) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidSpecError(context + ": " + e.what());
  }
}

}  // namespace lowrank
