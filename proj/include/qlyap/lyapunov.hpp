#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlyap/grid_state.hpp"
#include "qlyap/propagator.hpp"

namespace qlyap {

// How the separation between the fiducial and perturbed trajectories is
// measured. x_only is the literal |<x> - <x_fid>|; phase_space adds the
// momentum offset, sqrt(dx^2 + (w dp)^2), which does not vanish at x-crossings.
enum class DirectionPolicy { x_only, phase_space };

// What happens at each renormalization.
//  rescale_difference: psi_pert <- psi_fid + (delta0/d)(psi_pert - psi_fid),
//    Benettin on the full state; logs telescope exactly for linear dynamics.
//  displace_fiducial: psi_pert <- displace(psi_fid, delta0 * direction),
//    discarding any shape difference between the two states.
enum class RenormPolicy { rescale_difference, displace_fiducial };

std::string to_string(DirectionPolicy p);
std::string to_string(RenormPolicy p);
DirectionPolicy parse_direction_policy(const std::string& s);
RenormPolicy parse_renorm_policy(const std::string& s);

struct LyapunovConfig {
  double delta0 = 1e-6;
  double renorm_interval = 0.0;  // model time between renormalizations
  double t_max = 0.0;            // total integration time, warmup included
  double warmup = 0.0;           // fiducial-only transient excluded from the exponent
  DirectionPolicy direction = DirectionPolicy::phase_space;
  RenormPolicy renorm = RenormPolicy::rescale_difference;
  double p_weight = 1.0;

  void validate(double dt) const;
};

// Sampled at every renormalization time.
struct DivergenceSeries {
  std::vector<double> times;
  std::vector<double> delta_values;     // separation d in the configured projection, before rescaling
  std::vector<double> delta_x;          // |<x> - <x_fid>| before rescaling
  std::vector<double> accumulated_log;  // sum of ln(d_i / delta0) up to this time
};

struct FiniteTimeExponent {
  std::vector<double> times;
  std::vector<double> lambda_t;  // accumulated_log / (t - warmup)
  std::uint64_t trajectory_id = 0;
};

struct EnsembleEstimate {
  std::vector<double> times;
  std::vector<double> mean_lambda;
  std::vector<double> std_lambda;  // sample standard deviation across trajectories
  std::size_t n_trajectories = 0;
  bool partial = false;
  std::vector<std::uint64_t> failed_ids;
  std::vector<std::string> failure_messages;

  double final_mean() const { return mean_lambda.empty() ? 0.0 : mean_lambda.back(); }
  double final_std() const { return std_lambda.empty() ? 0.0 : std_lambda.back(); }
};

// Supplies dW for global step `step`; `fiducial_pre_mean_x` is <x> of the
// fiducial state before the step, which record replay needs. One value per
// step is applied to both trajectories.
using IncrementSource = std::function<double(std::uint64_t step, double fiducial_pre_mean_x)>;

IncrementSource stream_source(const NoiseStream& noise);
IncrementSource record_source(const MeasurementRecord& record);

// Optional instrumentation: the increment actually applied to each member
// of the pair at every step (NaN for the perturbed state before it exists).
using PairStepHook = std::function<void(std::uint64_t step, double dW_fiducial, double dW_perturbed)>;

// One shared-noise trajectory pair, advanced step by step so it can be
// checkpointed and resumed mid-run.
class LyapunovPair {
 public:
  LyapunovPair(const SplitStepper& stepper, double k, const LyapunovConfig& cfg, Wavefunction psi0,
               std::uint64_t trajectory_id);

  // Advance at most `max_steps` steps (or to the end).
  void advance(std::uint64_t max_steps, const IncrementSource& source, const PairStepHook& hook = {});
  bool finished() const { return step_ == total_steps_; }

  std::uint64_t step() const { return step_; }
  std::uint64_t total_steps() const { return total_steps_; }
  std::uint64_t warmup_steps() const { return warmup_steps_; }
  std::uint64_t renorm_steps() const { return renorm_steps_; }
  std::uint64_t trajectory_id() const { return trajectory_id_; }
  double accumulated_log() const { return accumulated_log_; }
  std::uint64_t reseed_count() const { return reseed_count_; }
  const Wavefunction& fiducial() const { return fiducial_; }
  const std::optional<Wavefunction>& perturbed() const { return perturbed_; }
  const DivergenceSeries& divergence() const { return divergence_; }
  const LyapunovConfig& config() const { return cfg_; }
  double k() const { return k_; }

  FiniteTimeExponent exponent() const;

  // Raw state for snapshots; restore() validates shapes.
  struct State {
    std::uint64_t step = 0;
    double accumulated_log = 0.0;
    std::uint64_t reseed_count = 0;
    Wavefunction fiducial;
    std::optional<Wavefunction> perturbed;
    DivergenceSeries divergence;
  };
  State state() const;
  void restore(State s);

 private:
  void start_perturbation();
  void renormalize();

  const SplitStepper* stepper_;
  double k_;
  LyapunovConfig cfg_;
  std::uint64_t trajectory_id_;
  std::uint64_t total_steps_;
  std::uint64_t warmup_steps_;
  std::uint64_t renorm_steps_;
  std::uint64_t step_ = 0;
  double accumulated_log_ = 0.0;
  std::uint64_t reseed_count_ = 0;
  Wavefunction fiducial_;
  std::optional<Wavefunction> perturbed_;
  DivergenceSeries divergence_;
};

struct TrajectoryResult {
  FiniteTimeExponent exponent;
  DivergenceSeries divergence;
  std::uint64_t reseed_count = 0;
};

TrajectoryResult quantum_lyapunov_trajectory(const Wavefunction& psi0, const Hamiltonian& ham,
                                             const MeasurementConfig& meas, const PropagatorConfig& cfg,
                                             const LyapunovConfig& lcfg, const NoiseStream& noise);

// Time-resolved mean and sample standard deviation across trajectories that
// share one time grid. Input order does not matter: results are sorted by
// trajectory id before reduction.
EnsembleEstimate aggregate(std::vector<FiniteTimeExponent> exponents);

struct EnsembleOptions {
  int workers = 0;              // 0: OpenMP default; 1: serial reference path
  bool allow_partial = false;   // otherwise any failed trajectory throws
  bool force_same_seed = false; // every member uses trajectory_id 0's stream (test hook)
};

// Runs trajectory ids 0..n_traj-1. Results do not depend on the worker count.
EnsembleEstimate ensemble_lyapunov(const Wavefunction& psi0, const Hamiltonian& ham, const MeasurementConfig& meas,
                                   const PropagatorConfig& cfg, const LyapunovConfig& lcfg,
                                   std::uint64_t master_seed, std::size_t n_traj, const EnsembleOptions& opts = {},
                                   std::vector<TrajectoryResult>* per_trajectory = nullptr);

}  // namespace qlyap
