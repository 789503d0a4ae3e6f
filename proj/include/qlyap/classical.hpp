#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qlyap/grid_state.hpp"
#include "qlyap/lyapunov.hpp"
#include "qlyap/noise.hpp"

namespace qlyap {

struct ClassicalState {
  double x = 0.0;
  double p = 0.0;
  double t = 0.0;
};

struct TangentVector {
  double dx = 0.0;
  double dp = 0.0;
};

// Optional additive momentum noise, dp += sqrt(2 D_p dt) N(0,1), drawn from
// the (seed, trajectory_id) stream. D_p = hbar^2 k emulates measurement
// backaction.
struct ClassicalNoiseConfig {
  double D_p = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t trajectory_id = 0;
};

// RK4 for x' = p/m, p' = -V'(x, t); if `noise` is given and D_p > 0 the
// momentum kick for step `noise->counter()` is added afterwards.
ClassicalState classical_step(const ClassicalState& s, const Hamiltonian& ham, double dt, double D_p = 0.0,
                              NoiseStream* noise = nullptr);

// Advances the linearization dx' = dp/m, dp' = -V''(x) dx along the
// deterministic base step from `s`, using the same RK4 stages.
TangentVector tangent_step(const ClassicalState& s, const TangentVector& v, const Hamiltonian& ham, double dt);

// Base and tangent advanced together; the noise kick (if any) touches only
// the base state.
std::pair<ClassicalState, TangentVector> joint_step(const ClassicalState& s, const TangentVector& v,
                                                   const Hamiltonian& ham, double dt, double D_p = 0.0,
                                                   NoiseStream* noise = nullptr);

struct BenettinConfig {
  double dt = 0.0;
  double t_max = 0.0;           // accumulation time after the transient
  double renorm_interval = 0.0;
  double transient = 0.0;
  ClassicalNoiseConfig noise;
};

// Tangent-space Benettin estimate. lambda_t is sampled at every
// renormalization; times count from the end of the transient.
FiniteTimeExponent benettin_lyapunov(const ClassicalState& s0, const Hamiltonian& ham, const BenettinConfig& cfg);

// Two-trajectory finite-difference estimate with separation d0, used to
// cross-check the tangent path. Both trajectories see the same noise.
FiniteTimeExponent finite_difference_lyapunov(const ClassicalState& s0, const Hamiltonian& ham,
                                              const BenettinConfig& cfg, double d0 = 1e-8);

// (x, p) at t = s0.t + n T for n = 1..n_periods.
std::vector<std::pair<double, double>> classical_strobe(const ClassicalState& s0, const Hamiltonian& ham, double dt,
                                                        std::size_t n_periods, const ClassicalNoiseConfig& noise = {});

double classical_energy(const ClassicalState& s, const Hamiltonian& ham);

}  // namespace qlyap
