#pragma once

#include "esq/hazard.hpp"
#include "esq/simulator.hpp"

namespace models {

// Arrival rate grows with the idle time x0 and with the queue length; service
// speeds up with load between Exp(1) and Exp(2).
inline esq::IntensityModel ramp_blend() {
  esq::IntensityModel m;
  m.lambda_max = 1.2;
  m.lambda0 = esq::HazardSpec({0.0, 2.0}, {0.6, 1.0}, 1.0);
  m.lambda_inf = 0.6;
  m.phi = esq::HazardSpec::exponential(1.0);
  m.q = esq::HazardSpec::exponential(2.0);
  m.arrival = esq::rules::ScaledHazardOfX0{m.lambda0, {1.0, 1.2, 3.0}};
  m.service = esq::rules::SandwichBlendService{2.0};
  return m;
}

// Constant arrivals below Lambda; service with a shared atom whose weight and
// continuous rate both scale up with the queue length.
inline esq::IntensityModel atom_scaled() {
  esq::IntensityModel m;
  m.lambda_max = 1.5;
  m.lambda0 = esq::HazardSpec::exponential(1.0);
  m.lambda_inf = 1.0;
  m.phi = esq::HazardSpec({0.0}, {0.8}, 0.8, {{1.5, 0.3}});
  m.q = esq::HazardSpec({0.0}, {2.0}, 2.0, {{1.5, 1.0}});
  m.arrival = esq::rules::ConstantArrival{1.0};
  m.service = esq::rules::ScaledHazardService{m.phi, {1.0, 2.5, 4.0}};
  return m;
}

// Arrival rate twice the declared bound.
inline esq::IntensityModel broken() {
  esq::IntensityModel m = esq::standard_model(1.0, esq::HazardSpec::exponential(1.0));
  m.arrival = esq::rules::ConstantArrival{2.0};
  return m;
}

}  // namespace models
