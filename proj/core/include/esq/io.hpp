#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "esq/coupling.hpp"
#include "esq/hazard.hpp"
#include "esq/lorden.hpp"
#include "esq/simulator.hpp"

namespace esq {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hazard specs accept several shorthands:
//   {"exp": r}
//   {"deterministic": d}
//   {"gamma": {"shape": a, "rate": r}}       (a >= 1, tabulated hazard)
//   {"erlang": {"shape": m, "rate": r}}      (integer shape)
//   {"knots": [...], "rates": [...], "tail_rate": r, "atoms": [[a, w], ...]}
// and always serialize to the explicit knots form.
HazardSpec hazard_from_json(const nlohmann::json& j);
nlohmann::json hazard_to_json(const HazardSpec& spec);

// Gamma(shape, rate) lifetime with shape >= 1 as a tabulated hazard.
HazardSpec gamma_hazard(double shape, double rate);

// {"Lambda", "lambda_inf", "lambda0", "phi", "Q", "arrival_rule", "service_rule"}.
// lambda_inf defaults to the infimum of lambda0, Q to phi, the arrival rule
// to constant Lambda and the service rule to phi.
IntensityModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const IntensityModel& model);

// {"lower": H, "upper": H, "rule": "iid-lower" | "iid-upper" | "alternating" |
//   {"history-mixture": beta}}
RenewalScenario renewal_from_json(const nlohmann::json& j);

SystemState state_from_json(const nlohmann::json& j);
nlohmann::json state_to_json(const SystemState& s);

// Every constant as {"value": x, "provenance": "analytic" | "empirical+3se"}.
nlohmann::json plan_to_json(const CouplingPlan& plan);

// Deterministic JSON text with round-trip precision for doubles.
std::string dump(const nlohmann::json& j);

}  // namespace esq
