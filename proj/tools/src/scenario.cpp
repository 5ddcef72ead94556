#include "esq/cli/scenario.hpp"

#include <fstream>

#include "esq/io.hpp"

namespace esq::cli {
namespace {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("experiment field \"") + key + "\" has the wrong type");
  }
}

std::size_t count_or(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ParseError(std::string("experiment field \"") + key + "\" must be a positive integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> times_or(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  auto out = get_or<std::vector<double>>(j, key, {});
  for (double t : out) {
    if (!(t > 0.0)) throw ParseError(std::string("experiment field \"") + key + "\" needs t > 0");
  }
  return out;
}

Experiment experiment_from_json(const json& j) {
  Experiment e;
  if (!j.is_object()) throw ParseError("\"experiment\" must be an object");
  e.horizon = get_or(j, "horizon", e.horizon);
  e.reps = count_or(j, "reps", e.reps);
  e.cycles = count_or(j, "cycles", e.cycles);
  e.t_grid = times_or(j, "t_grid", e.t_grid);
  e.lorden_times = times_or(j, "lorden_times", e.lorden_times);
  e.poisson_times = times_or(j, "poisson_times", e.poisson_times);
  e.grid_step = get_or(j, "grid_step", e.grid_step);
  e.x_max = get_or(j, "x_max", e.x_max);
  e.tol = get_or(j, "tol", e.tol);
  e.seed = get_or<std::uint64_t>(j, "seed", e.seed);
  e.er0_reps = count_or(j, "er0_reps", e.er0_reps);
  e.validate_samples = count_or(j, "validate_samples", e.validate_samples);
  e.pair_events = count_or(j, "pair_events", e.pair_events);
  if (j.contains("initial_states")) {
    if (!j.at("initial_states").is_array() || j.at("initial_states").empty()) {
      throw ParseError("\"initial_states\" must be a non-empty array");
    }
    e.initial_states.clear();
    for (const json& s : j.at("initial_states")) e.initial_states.push_back(state_from_json(s));
  }
  if (!(e.horizon > 0.0)) throw ParseError("horizon must be positive");
  if (!(e.grid_step > 0.0) || !(e.x_max > e.grid_step)) {
    throw ParseError("need 0 < grid_step < x_max");
  }
  if (!(e.tol > 0.0 && e.tol < 1.0)) throw ParseError("tol must lie in (0, 1)");
  return e;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("scenario must be a JSON object");
  if (!j.contains("model")) throw ParseError("scenario needs a \"model\"");
  Scenario sc;
  sc.name = get_or<std::string>(j, "name", "scenario");
  sc.model = model_from_json(j.at("model"));
  sc.k = get_or(j, "k", sc.k);
  if (sc.k < 2) throw ParseError("k must be >= 2");
  if (j.contains("renewals")) {
    if (!j.at("renewals").is_array()) throw ParseError("\"renewals\" must be an array");
    for (const json& r : j.at("renewals")) {
      sc.renewals.push_back({get_or<std::string>(r, "name", "renewal"), renewal_from_json(r)});
    }
  }
  if (j.contains("experiment")) sc.experiment = experiment_from_json(j.at("experiment"));
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace esq::cli
