#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qlyap/grid_state.hpp"
#include "qlyap/noise.hpp"

namespace qlyap {

// Step layout is fixed: half kinetic -> potential phase (+ measurement) ->
// half kinetic, i.e. Strang splitting with the measurement factor applied
// at the centre of the step.
struct PropagatorConfig {
  double dt = 0.0;
  bool midpoint_drive = true;  // evaluate cos(omega t) at t + dt/2

  // dt > 0 and, for a driven Hamiltonian, dt <= T/100.
  void validate(const Hamiltonian& ham) const;
};

struct MeasurementConfig {
  double k = 0.0;
};

struct StepResult {
  double pre_mean_x = 0.0;   // <x> before the step; enters dy (Ito convention)
  std::optional<double> dy;  // absent for k = 0, there is no record channel
};

// Precomputed phase tables for one (grid, Hamiltonian, dt). Stateless apart
// from the tables, so a const stepper can be shared by any number of
// trajectories and threads.
class SplitStepper {
 public:
  SplitStepper(const GridSpec& grid, const Hamiltonian& ham, const PropagatorConfig& cfg);

  const GridSpec& grid() const { return grid_; }
  const Hamiltonian& hamiltonian() const { return ham_; }
  const PropagatorConfig& config() const { return cfg_; }
  double dt() const { return cfg_.dt; }

  // One Strang step under H(t), t = psi.time; advances psi.time by dt.
  void unitary_step(Wavefunction& psi) const;

  // Multiplies by exp[-2k (x-<x>)^2 dt + sqrt(2k) (x-<x>) dW] and
  // renormalizes. This is the Gaussian Kraus weight of a position
  // measurement with record increment dy = <x> dt + dW/sqrt(8k); the -2k is
  // the Ito-corrected drift that makes the ensemble obey the master equation.
  void measurement_substep(Wavefunction& psi, double k, double dW) const;

  // unitary_step with the measurement substep inserted after the potential
  // phase. For k = 0 this is bitwise identical to unitary_step.
  StepResult sse_step(Wavefunction& psi, double k, double dW) const;

 private:
  void kinetic_half(ComplexVector& amp) const;
  void potential_phase(ComplexVector& amp, double t) const;

  GridSpec grid_;
  Hamiltonian ham_;
  PropagatorConfig cfg_;
  std::vector<double> x_;
  ComplexVector kinetic_half_;  // includes the 1/n of the backward FFT
  ComplexVector static_phase_;
};

// Value-returning forms of the stepper operations.
Wavefunction unitary_step(const Wavefunction& psi, const Hamiltonian& ham, const PropagatorConfig& cfg, double t);
Wavefunction measurement_substep(const Wavefunction& psi, double k, double dt, double dW);
std::pair<Wavefunction, std::optional<double>> sse_step(const Wavefunction& psi, const Hamiltonian& ham,
                                                        const MeasurementConfig& meas,
                                                        const PropagatorConfig& cfg, double t, double dW);

struct StepInfo {
  std::uint64_t step = 0;  // index of the step just taken, counted from the evolve start
  double t = 0.0;          // time after the step
  double pre_mean_x = 0.0;
  double dW = 0.0;
  std::optional<double> dy;
};

using StepObserver = std::function<void(const StepInfo&, const Wavefunction&)>;

// Number of steps of size dt covering [t0, t1]; throws unless the interval
// is a whole number of steps to within 1e-9 dt.
std::uint64_t steps_between(double t0, double t1, double dt);

// Repeated sse_step from t0 to t1 drawing increments from `noise` (which
// must be positioned at t0). Throws NumericalError when the boundary density
// exceeds 1e-10.
Wavefunction evolve(const Wavefunction& psi, const SplitStepper& stepper, const MeasurementConfig& meas,
                    double t0, double t1, NoiseStream& noise, const StepObserver& observer = {});

Wavefunction evolve(const Wavefunction& psi, const Hamiltonian& ham, const MeasurementConfig& meas,
                    const PropagatorConfig& cfg, double t0, double t1, NoiseStream& noise,
                    const StepObserver& observer = {});

inline constexpr double kBoundaryDensityLimit = 1e-10;
void check_boundary(const Wavefunction& psi);

}  // namespace qlyap
