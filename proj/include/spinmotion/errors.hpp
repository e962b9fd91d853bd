#pragma once

#include <stdexcept>

namespace spinmotion {

// A Hamiltonian callback broke its contract (e.g. non-Hermitian sample).
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerics drifted out of spec (e.g. propagator lost unitarity).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A planner could not produce a usable plan (e.g. bin collision between a
// target and a non-target). Monte Carlo counts these as failed instances.
struct PlanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spinmotion
