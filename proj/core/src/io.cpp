#include "esq/io.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace esq {
namespace {

using nlohmann::json;

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");
  if (!j.at(key).is_number()) throw ParseError(std::string("field \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

std::vector<double> numbers(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ParseError(std::string("field \"") + key + "\" must be an array");
  }
  std::vector<double> out;
  for (const json& v : j.at(key)) {
    if (!v.is_number()) throw ParseError(std::string("field \"") + key + "\" must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string type_of(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ParseError(std::string(what) + " needs a string \"type\"");
  }
  return j.at("type").get<std::string>();
}

BoundedFactor factor_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("factor must be an object");
  BoundedFactor f{number(j, "lo"), number(j, "hi"), number_or(j, "scale", 1.0)};
  if (!(f.scale > 0.0) || !(f.lo >= 0.0) || !(f.hi >= 0.0)) {
    throw ParseError("factor needs lo, hi >= 0 and scale > 0");
  }
  return f;
}

json factor_to_json(const BoundedFactor& f) { return {{"lo", f.lo}, {"hi", f.hi}, {"scale", f.scale}}; }

double hazard_infimum(const HazardSpec& h) {
  double lo = h.tail_rate();
  if (h.knots().size() > 1) {
    for (double r : h.rates()) lo = std::min(lo, r);
  }
  return lo;
}

template <class F>
auto guarded(const char* field, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(std::string(field) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(field) + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(std::string(field) + ": " + e.what());
  }
}

}  // namespace

HazardSpec gamma_hazard(double shape, double rate) {
  if (!(shape >= 1.0) || !(rate > 0.0)) throw ParseError("gamma needs shape >= 1 and rate > 0");
  if (shape == 1.0) return HazardSpec::exponential(rate);
  const boost::math::gamma_distribution<double> dist(shape, 1.0 / rate);
  const double t_end = quantile(complement(dist, 1e-13));
  auto h = [shape, rate](double t) {
    if (t <= 0.0) return 0.0;
    const double x = rate * t;
    return rate * boost::math::gamma_p_derivative(shape, x) / boost::math::gamma_q(shape, x);
  };
  return HazardSpec::from_hazard_fn(h, t_end, t_end / 4000.0);
}

HazardSpec hazard_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("hazard spec must be an object");
  try {
    if (j.contains("exp")) return HazardSpec::exponential(number(j, "exp"));
    if (j.contains("deterministic")) return HazardSpec::deterministic(number(j, "deterministic"));
    if (j.contains("gamma")) {
      return gamma_hazard(number(j.at("gamma"), "shape"), number(j.at("gamma"), "rate"));
    }
    if (j.contains("erlang")) {
      const double m = number(j.at("erlang"), "shape");
      if (m != std::floor(m)) throw ParseError("erlang shape must be an integer");
      return gamma_hazard(m, number(j.at("erlang"), "rate"));
    }
    std::vector<Atom> atoms;
    if (j.contains("atoms")) {
      for (const json& a : j.at("atoms")) {
        if (!a.is_array() || a.size() != 2) throw ParseError("atoms must be [location, weight] pairs");
        atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      }
    }
    return HazardSpec(numbers(j, "knots"), numbers(j, "rates"), number(j, "tail_rate"),
                      std::move(atoms));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

json hazard_to_json(const HazardSpec& spec) {
  json atoms = json::array();
  for (const Atom& a : spec.atoms()) atoms.push_back({a.location, a.weight});
  return {{"knots", spec.knots()},
          {"rates", spec.rates()},
          {"tail_rate", spec.tail_rate()},
          {"atoms", atoms}};
}

IntensityModel model_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("model must be an object");
  IntensityModel m;
  m.lambda_max = number(j, "Lambda");
  if (!(m.lambda_max > 0.0)) throw ParseError("Lambda must be positive");
  m.lambda0 = j.contains("lambda0")
                  ? guarded("lambda0", [&] { return hazard_from_json(j.at("lambda0")); })
                  : HazardSpec::exponential(m.lambda_max);
  m.lambda_inf = number_or(j, "lambda_inf", hazard_infimum(m.lambda0));
  if (!(m.lambda_inf > 0.0)) throw ParseError("lambda_inf must be positive");
  m.phi = guarded("phi", [&] { return hazard_from_json(j.at("phi")); });
  m.q = j.contains("Q") ? guarded("Q", [&] { return hazard_from_json(j.at("Q")); }) : m.phi;

  if (j.contains("arrival_rule")) {
    const json& r = j.at("arrival_rule");
    m.arrival = guarded("arrival_rule", [&]() -> ArrivalRule {
      const std::string type = type_of(r, "arrival_rule");
      if (type == "constant") return rules::ConstantArrival{number_or(r, "rate", m.lambda_max)};
      if (type == "hazard_of_x0") return rules::HazardOfX0{hazard_from_json(r.at("hazard"))};
      if (type == "scaled_hazard_of_x0") {
        return rules::ScaledHazardOfX0{hazard_from_json(r.at("hazard")),
                                       factor_from_json(r.at("factor"))};
      }
      throw ParseError("unknown arrival rule \"" + type + "\"");
    });
  } else {
    m.arrival = rules::ConstantArrival{m.lambda_max};
  }

  if (j.contains("service_rule")) {
    const json& r = j.at("service_rule");
    m.service = guarded("service_rule", [&]() -> ServiceRule {
      const std::string type = type_of(r, "service_rule");
      if (type == "lower") return rules::LowerService{};
      if (type == "hazard") return rules::HazardService{hazard_from_json(r.at("hazard"))};
      if (type == "scaled_hazard") {
        return rules::ScaledHazardService{hazard_from_json(r.at("hazard")),
                                          factor_from_json(r.at("factor"))};
      }
      if (type == "sandwich_blend") {
        const double scale = number_or(r, "scale", 1.0);
        if (!(scale > 0.0)) throw ParseError("scale must be positive");
        return rules::SandwichBlendService{scale};
      }
      throw ParseError("unknown service rule \"" + type + "\"");
    });
  }
  return m;
}

json model_to_json(const IntensityModel& m) {
  json out;
  out["Lambda"] = m.lambda_max;
  out["lambda_inf"] = m.lambda_inf;
  out["lambda0"] = hazard_to_json(m.lambda0);
  out["phi"] = hazard_to_json(m.phi);
  out["Q"] = hazard_to_json(m.q);
  out["arrival_rule"] = std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, rules::ConstantArrival>) {
          return {{"type", "constant"}, {"rate", r.rate}};
        } else if constexpr (std::is_same_v<T, rules::HazardOfX0>) {
          return {{"type", "hazard_of_x0"}, {"hazard", hazard_to_json(r.hazard)}};
        } else {
          return {{"type", "scaled_hazard_of_x0"},
                  {"hazard", hazard_to_json(r.hazard)},
                  {"factor", factor_to_json(r.factor)}};
        }
      },
      m.arrival);
  out["service_rule"] = std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, rules::LowerService>) {
          return {{"type", "lower"}};
        } else if constexpr (std::is_same_v<T, rules::HazardService>) {
          return {{"type", "hazard"}, {"hazard", hazard_to_json(r.hazard)}};
        } else if constexpr (std::is_same_v<T, rules::ScaledHazardService>) {
          return {{"type", "scaled_hazard"},
                  {"hazard", hazard_to_json(r.hazard)},
                  {"factor", factor_to_json(r.factor)}};
        } else {
          return {{"type", "sandwich_blend"}, {"scale", r.scale}};
        }
      },
      m.service);
  return out;
}

RenewalScenario renewal_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("renewal scenario must be an object");
  HazardSandwich sandwich{guarded("lower", [&] { return hazard_from_json(j.at("lower")); }),
                          guarded("upper", [&] { return hazard_from_json(j.at("upper")); })};
  DependenceRule rule = DependenceRule::iid_lower();
  if (j.contains("rule")) {
    const json& r = j.at("rule");
    if (r.is_string()) {
      const std::string name = r.get<std::string>();
      if (name == "iid-lower") {
        rule = DependenceRule::iid_lower();
      } else if (name == "iid-upper") {
        rule = DependenceRule::iid_upper();
      } else if (name == "alternating") {
        rule = DependenceRule::alternating();
      } else {
        throw ParseError("unknown dependence rule \"" + name + "\"");
      }
    } else if (r.is_object() && r.contains("history-mixture")) {
      rule = DependenceRule::history_mixture(number(r, "history-mixture"));
    } else {
      throw ParseError("rule must be a rule name or {\"history-mixture\": beta}");
    }
  }
  try {
    return RenewalScenario(std::move(sandwich), rule);
  } catch (const std::exception& e) {
    throw ParseError(e.what());
  }
}

SystemState state_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("state must be an object");
  SystemState s;
  s.x0 = number_or(j, "x0", 0.0);
  if (j.contains("elapsed")) s.elapsed = numbers(j, "elapsed");
  std::sort(s.elapsed.begin(), s.elapsed.end(), std::greater<>());
  if (!s.well_formed()) throw ParseError("state needs x0 <= every elapsed time, all >= 0");
  return s;
}

json state_to_json(const SystemState& s) { return {{"x0", s.x0}, {"elapsed", s.elapsed}}; }

json plan_to_json(const CouplingPlan& plan) {
  auto analytic = [](double v) { return json{{"value", v}, {"provenance", "analytic"}}; };
  json out;
  out["k"] = analytic(plan.k);
  out["rho"] = analytic(plan.rho);
  out["pi0"] = analytic(plan.pi0);
  out["pi1"] = analytic(plan.pi1);
  out["pi"] = analytic(plan.pi);
  out["theta"] = analytic(plan.theta);
  out["theta0"] = analytic(plan.theta0);
  out["K0"] = analytic(plan.K0);
  out["K"] = analytic(plan.K);
  out["er1_k"] = analytic(plan.er1_k);
  out["er0_k"] = {{"value", plan.er0_k}, {"provenance", to_string(plan.er0_provenance)}};
  if (plan.er0_provenance == Provenance::Empirical) {
    out["er0_k"]["standard_error"] = plan.er0_standard_error;
    out["er0_k"]["reps"] = plan.er0_reps;
  }
  // The constant inherits the weakest provenance of its inputs.
  out["bound_constant"] = {{"value", plan.bound_constant},
                           {"provenance", to_string(plan.er0_provenance)}};
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace esq
