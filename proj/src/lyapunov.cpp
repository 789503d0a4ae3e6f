#include "qlyap/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qlyap/errors.hpp"

namespace qlyap {

namespace {
constexpr double kUnderflow = 1e-14;
}  // namespace

std::string to_string(DirectionPolicy p) { return p == DirectionPolicy::x_only ? "x-only" : "phase-space"; }

std::string to_string(RenormPolicy p) {
  return p == RenormPolicy::rescale_difference ? "rescale-difference" : "displace-fiducial";
}

DirectionPolicy parse_direction_policy(const std::string& s) {
  if (s == "x-only") return DirectionPolicy::x_only;
  if (s == "phase-space") return DirectionPolicy::phase_space;
  throw std::invalid_argument("unknown direction policy '" + s + "' (x-only, phase-space)");
}

RenormPolicy parse_renorm_policy(const std::string& s) {
  if (s == "rescale-difference") return RenormPolicy::rescale_difference;
  if (s == "displace-fiducial") return RenormPolicy::displace_fiducial;
  throw std::invalid_argument("unknown renormalization policy '" + s + "' (rescale-difference, displace-fiducial)");
}

void LyapunovConfig::validate(double dt) const {
  if (!(delta0 > 0.0)) throw std::invalid_argument("LyapunovConfig: delta0 must be positive");
  if (!(renorm_interval >= dt * (1.0 - 1e-12)))
    throw std::invalid_argument("LyapunovConfig: renorm_interval must be at least dt");
  if (!(warmup >= 0.0)) throw std::invalid_argument("LyapunovConfig: warmup must be non-negative");
  if (!(t_max >= warmup + renorm_interval * (1.0 - 1e-12)))
    throw std::invalid_argument("LyapunovConfig: t_max must cover warmup plus one renormalization interval");
  if (!(p_weight >= 0.0)) throw std::invalid_argument("LyapunovConfig: p_weight must be non-negative");
}

IncrementSource stream_source(const NoiseStream& noise) {
  return [noise](std::uint64_t step, double) { return noise.at(step); };
}

IncrementSource record_source(const MeasurementRecord& record) {
  return [&record](std::uint64_t step, double pre_mean_x) {
    return increment_from_record(record, static_cast<std::size_t>(step), pre_mean_x);
  };
}

LyapunovPair::LyapunovPair(const SplitStepper& stepper, double k, const LyapunovConfig& cfg, Wavefunction psi0,
                           std::uint64_t trajectory_id)
    : stepper_(&stepper), k_(k), cfg_(cfg), trajectory_id_(trajectory_id), fiducial_(std::move(psi0)) {
  if (k < 0.0) throw std::invalid_argument("LyapunovPair: k must be non-negative");
  const double dt = stepper.dt();
  cfg_.validate(dt);
  total_steps_ = steps_between(0.0, cfg_.t_max, dt);
  warmup_steps_ = steps_between(0.0, cfg_.warmup, dt);
  renorm_steps_ = steps_between(0.0, cfg_.renorm_interval, dt);
  if (renorm_steps_ == 0) throw std::invalid_argument("LyapunovPair: renorm_interval shorter than dt");
  fiducial_.time = 0.0;
  if (warmup_steps_ == 0) start_perturbation();
}

void LyapunovPair::start_perturbation() { perturbed_ = displace(fiducial_, cfg_.delta0, 0.0); }

void LyapunovPair::renormalize() {
  const double dx = mean_x(*perturbed_) - mean_x(fiducial_);
  const bool x_only = cfg_.direction == DirectionPolicy::x_only;
  const double dp = x_only ? 0.0 : mean_p(*perturbed_) - mean_p(fiducial_);
  const double d = x_only ? std::abs(dx) : std::hypot(dx, cfg_.p_weight * dp);
  const double t = fiducial_.time;

  if (!std::isfinite(d)) throw NumericalError("lyapunov: non-finite separation at t = " + diag(t));
  const auto& g = fiducial_.grid;
  if (d > 0.1 * (g.x_max - g.x_min))
    throw NumericalError("lyapunov: separation " + diag(d) + " exceeds the grid margin at t = " +
                         diag(t) + "; shorten renorm_interval");

  if (d < kUnderflow) {
    // Direction undefined; restart along +x and leave the log untouched.
    ++reseed_count_;
    perturbed_ = displace(fiducial_, cfg_.delta0, 0.0);
  } else {
    accumulated_log_ += std::log(d / cfg_.delta0);
    const double scale = cfg_.delta0 / d;
    if (cfg_.renorm == RenormPolicy::rescale_difference) {
      auto& pert = perturbed_->amplitudes;
      const auto& fid = fiducial_.amplitudes;
      // Align the global phase first: a phase offset moves no expectation
      // value, so left in the difference it is amplified by every rescale
      // until the pair differs only by a phase and d underflows.
      Complex overlap{0.0, 0.0};
      for (std::size_t j = 0; j < pert.size(); ++j) overlap += std::conj(pert[j]) * fid[j];
      const Complex align = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex{1.0, 0.0};
      for (std::size_t j = 0; j < pert.size(); ++j) pert[j] = fid[j] + scale * (align * pert[j] - fid[j]);
      normalize(*perturbed_);
    } else {
      perturbed_ = displace(fiducial_, scale * dx, scale * dp);
    }
    perturbed_->time = t;
  }
  divergence_.times.push_back(t);
  divergence_.delta_values.push_back(d);
  divergence_.delta_x.push_back(std::abs(dx));
  divergence_.accumulated_log.push_back(accumulated_log_);
}

void LyapunovPair::advance(std::uint64_t max_steps, const IncrementSource& source, const PairStepHook& hook) {
  const std::uint64_t end = std::min(total_steps_, step_ + max_steps);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (; step_ < end;) {
    double dW = 0.0;
    if (k_ > 0.0) dW = source(step_, mean_x(fiducial_));
    stepper_->sse_step(fiducial_, k_, dW);
    check_boundary(fiducial_);
    if (perturbed_) {
      stepper_->sse_step(*perturbed_, k_, dW);
      check_boundary(*perturbed_);
    }
    if (hook) hook(step_, dW, perturbed_ ? dW : nan);
    ++step_;
    if (step_ == warmup_steps_ && !perturbed_) {
      start_perturbation();
    } else if (step_ > warmup_steps_ && (step_ - warmup_steps_) % renorm_steps_ == 0) {
      renormalize();
    }
  }
}

FiniteTimeExponent LyapunovPair::exponent() const {
  FiniteTimeExponent fte;
  fte.trajectory_id = trajectory_id_;
  fte.times = divergence_.times;
  fte.lambda_t.resize(fte.times.size());
  for (std::size_t i = 0; i < fte.times.size(); ++i)
    fte.lambda_t[i] = divergence_.accumulated_log[i] / (fte.times[i] - cfg_.warmup);
  return fte;
}

LyapunovPair::State LyapunovPair::state() const {
  return State{step_, accumulated_log_, reseed_count_, fiducial_, perturbed_, divergence_};
}

void LyapunovPair::restore(State s) {
  if (s.step > total_steps_) throw IntegrityError("LyapunovPair::restore: step beyond run length");
  if (s.fiducial.amplitudes.size() != fiducial_.amplitudes.size() || !(s.fiducial.grid == fiducial_.grid))
    throw IntegrityError("LyapunovPair::restore: grid mismatch");
  if (s.perturbed.has_value() != (s.step >= warmup_steps_))
    throw IntegrityError("LyapunovPair::restore: perturbed state inconsistent with step");
  if (s.perturbed && s.perturbed->amplitudes.size() != fiducial_.amplitudes.size())
    throw IntegrityError("LyapunovPair::restore: grid mismatch in perturbed state");
  step_ = s.step;
  accumulated_log_ = s.accumulated_log;
  reseed_count_ = s.reseed_count;
  fiducial_ = std::move(s.fiducial);
  perturbed_ = std::move(s.perturbed);
  divergence_ = std::move(s.divergence);
}

TrajectoryResult quantum_lyapunov_trajectory(const Wavefunction& psi0, const Hamiltonian& ham,
                                             const MeasurementConfig& meas, const PropagatorConfig& cfg,
                                             const LyapunovConfig& lcfg, const NoiseStream& noise) {
  const SplitStepper stepper(psi0.grid, ham, cfg);
  LyapunovPair pair(stepper, meas.k, lcfg, psi0, noise.trajectory_id());
  pair.advance(pair.total_steps(), stream_source(noise));
  return TrajectoryResult{pair.exponent(), pair.divergence(), pair.reseed_count()};
}

}  // namespace qlyap
