#include "qlyap/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qlyap/errors.hpp"
#include "qlyap/fft.hpp"

namespace qlyap {

void PropagatorConfig::validate(const Hamiltonian& ham) const {
  if (!(dt > 0.0)) throw std::invalid_argument("PropagatorConfig: dt must be positive");
  if (ham.drive_frequency > 0.0) {
    const double period = 2.0 * std::numbers::pi / ham.drive_frequency;
    if (dt > period / 100.0 * (1.0 + 1e-12))
      throw std::invalid_argument("PropagatorConfig: dt must not exceed T/100");
  }
}

SplitStepper::SplitStepper(const GridSpec& grid, const Hamiltonian& ham, const PropagatorConfig& cfg)
    : grid_(grid), ham_(ham), cfg_(cfg) {
  cfg_.validate(ham_);
  const std::size_t n = grid_.n_points;
  const double hbar = grid_.hbar;
  const double dt = cfg_.dt;
  x_ = grid_.positions();
  kinetic_half_.resize(n);
  static_phase_.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = grid_.p(j);
    const double phase = ham_.kinetic ? -p * p * dt / (4.0 * ham_.mass * hbar) : 0.0;
    kinetic_half_[j] = std::polar(inv_n, phase);
    static_phase_[j] = std::polar(1.0, -ham_.static_potential(x_[j]) * dt / hbar);
  }
}

void SplitStepper::kinetic_half(ComplexVector& amp) const {
  if (!ham_.kinetic) return;
  fft::forward(amp);
  for (std::size_t j = 0; j < amp.size(); ++j) amp[j] *= kinetic_half_[j];
  fft::backward(amp);
}

void SplitStepper::potential_phase(ComplexVector& amp, double t) const {
  const double t_drive = cfg_.midpoint_drive ? t + 0.5 * cfg_.dt : t;
  const double f = ham_.drive(t_drive);
  if (f == 0.0) {
    for (std::size_t j = 0; j < amp.size(); ++j) amp[j] *= static_phase_[j];
    return;
  }
  // exp(i c x_j) by recurrence in blocks of 32 points, restarted from an
  // exact polar() at each block start to bound the phase error.
  const double c = -f * cfg_.dt / grid_.hbar;
  const Complex step = std::polar(1.0, c * grid_.dx());
  constexpr std::size_t kBlock = 32;
  for (std::size_t j0 = 0; j0 < amp.size(); j0 += kBlock) {
    Complex w = std::polar(1.0, c * x_[j0]);
    const std::size_t j1 = std::min(amp.size(), j0 + kBlock);
    for (std::size_t j = j0; j < j1; ++j) {
      amp[j] *= static_phase_[j] * w;
      w *= step;
    }
  }
}

void SplitStepper::measurement_substep(Wavefunction& psi, double k, double dW) const {
  if (k < 0.0) throw std::invalid_argument("measurement_substep: k must be non-negative");
  if (k == 0.0) return;
  auto& amp = psi.amplitudes;
  const double m = mean_x(psi);
  const double a = 2.0 * k * cfg_.dt;
  const double b = std::sqrt(2.0 * k) * dW;
  // Shift the exponent by its maximum so the largest weight is exp(0).
  const double y_star = b / (2.0 * a);
  const double e_max = b * y_star - a * y_star * y_star;
  double s = 0.0;
  for (std::size_t j = 0; j < amp.size(); ++j) {
    const double y = x_[j] - m;
    amp[j] *= std::exp(b * y - a * y * y - e_max);
    s += std::norm(amp[j]);
  }
  const double nrm = s * grid_.dx();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("measurement_substep: state norm collapsed");
  const double scale = 1.0 / std::sqrt(nrm);
  for (auto& z : amp) z *= scale;
}

StepResult SplitStepper::sse_step(Wavefunction& psi, double k, double dW) const {
  StepResult r;
  if (k < 0.0) throw std::invalid_argument("sse_step: k must be non-negative");
  if (k > 0.0) {
    r.pre_mean_x = mean_x(psi);
    r.dy = r.pre_mean_x * cfg_.dt + dW / std::sqrt(8.0 * k);
  }
  const double t = psi.time;
  kinetic_half(psi.amplitudes);
  potential_phase(psi.amplitudes, t);
  if (k > 0.0) measurement_substep(psi, k, dW);
  kinetic_half(psi.amplitudes);
  psi.time = t + cfg_.dt;
  return r;
}

void SplitStepper::unitary_step(Wavefunction& psi) const { sse_step(psi, 0.0, 0.0); }

Wavefunction unitary_step(const Wavefunction& psi, const Hamiltonian& ham, const PropagatorConfig& cfg, double t) {
  SplitStepper stepper(psi.grid, ham, cfg);
  Wavefunction out = psi;
  out.time = t;
  stepper.unitary_step(out);
  return out;
}

Wavefunction measurement_substep(const Wavefunction& psi, double k, double dt, double dW) {
  SplitStepper stepper(psi.grid, free_hamiltonian(1.0), PropagatorConfig{dt, true});
  Wavefunction out = psi;
  stepper.measurement_substep(out, k, dW);
  return out;
}

std::pair<Wavefunction, std::optional<double>> sse_step(const Wavefunction& psi, const Hamiltonian& ham,
                                                        const MeasurementConfig& meas,
                                                        const PropagatorConfig& cfg, double t, double dW) {
  SplitStepper stepper(psi.grid, ham, cfg);
  Wavefunction out = psi;
  out.time = t;
  const auto r = stepper.sse_step(out, meas.k, dW);
  return {std::move(out), r.dy};
}

std::uint64_t steps_between(double t0, double t1, double dt) {
  const double n = (t1 - t0) / dt;
  if (n < -1e-9) throw std::invalid_argument("steps_between: t1 < t0");
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument("steps_between: interval is not a whole number of steps");
  return static_cast<std::uint64_t>(r);
}

void check_boundary(const Wavefunction& psi) {
  const double d = boundary_density(psi);
  if (!(d <= kBoundaryDensityLimit))
    throw NumericalError("boundary density " + diag(d) + " exceeds " +
                         diag(kBoundaryDensityLimit) + " at t = " + diag(psi.time) +
                         "; widen the grid");
}

Wavefunction evolve(const Wavefunction& psi, const SplitStepper& stepper, const MeasurementConfig& meas,
                    double t0, double t1, NoiseStream& noise, const StepObserver& observer) {
  const std::uint64_t n = steps_between(t0, t1, stepper.dt());
  Wavefunction out = psi;
  // Times on the dt lattice are computed as (index * dt), not accumulated, so
  // splitting an interval reproduces the single-call trajectory bitwise.
  const double s0 = std::round(t0 / stepper.dt());
  const bool on_lattice = std::abs(t0 / stepper.dt() - s0) < 1e-9 * std::max(1.0, std::abs(s0));
  auto time_at = [&](std::uint64_t i) {
    return on_lattice ? (s0 + static_cast<double>(i)) * stepper.dt() : t0 + static_cast<double>(i) * stepper.dt();
  };
  StepInfo info;
  for (std::uint64_t i = 0; i < n; ++i) {
    out.time = time_at(i);
    const double dW = meas.k > 0.0 ? noise.next() : 0.0;
    const auto r = stepper.sse_step(out, meas.k, dW);
    out.time = time_at(i + 1);
    check_boundary(out);
    if (observer) {
      info.step = i;
      info.t = out.time;
      info.pre_mean_x = r.pre_mean_x;
      info.dW = dW;
      info.dy = r.dy;
      observer(info, out);
    }
  }
  if (n == 0) out.time = t0;
  return out;
}

Wavefunction evolve(const Wavefunction& psi, const Hamiltonian& ham, const MeasurementConfig& meas,
                    const PropagatorConfig& cfg, double t0, double t1, NoiseStream& noise,
                    const StepObserver& observer) {
  SplitStepper stepper(psi.grid, ham, cfg);
  return evolve(psi, stepper, meas, t0, t1, noise, observer);
}

}  // namespace qlyap
