#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>

#include "qlyap/errors.hpp"
#include "qlyap/lyapunov.hpp"
#include "qlyap/parallel.hpp"

#ifdef QLYAP_HAVE_OPENMP
#include <omp.h>
#endif

namespace qlyap {

EnsembleEstimate aggregate(std::vector<FiniteTimeExponent> exponents) {
  EnsembleEstimate est;
  est.n_trajectories = exponents.size();
  if (exponents.empty()) return est;
  std::sort(exponents.begin(), exponents.end(),
            [](const auto& a, const auto& b) { return a.trajectory_id < b.trajectory_id; });
  const auto& times = exponents.front().times;
  for (const auto& e : exponents)
    if (e.times.size() != times.size()) throw std::invalid_argument("aggregate: trajectories disagree on time grid");

  const std::size_t n = exponents.size();
  est.times = times;
  est.mean_lambda.assign(times.size(), 0.0);
  est.std_lambda.assign(times.size(), 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double s = 0.0;
    for (const auto& e : exponents) s += e.lambda_t[i];
    const double mean = s / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& e : exponents) ss += (e.lambda_t[i] - mean) * (e.lambda_t[i] - mean);
    est.mean_lambda[i] = mean;
    est.std_lambda[i] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  }
  return est;
}

std::vector<TaskFailure> for_each_trajectory(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::vector<char> failed(n, 0);
  auto run_one = [&](std::size_t id) {
    try {
      fn(id);
    } catch (const std::exception& ex) {
      failed[id] = 1;
      errors[id] = ex.what();
    }
  };
#ifdef QLYAP_HAVE_OPENMP
  if (workers != 1) {
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::size_t id = 0; id < n; ++id) run_one(id);
  } else {
    for (std::size_t id = 0; id < n; ++id) run_one(id);
  }
#else
  (void)workers;
  for (std::size_t id = 0; id < n; ++id) run_one(id);
#endif
  std::vector<TaskFailure> out;
  for (std::size_t id = 0; id < n; ++id)
    if (failed[id]) out.push_back({id, std::move(errors[id])});
  return out;
}

int available_workers() {
#ifdef QLYAP_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

EnsembleEstimate finish_ensemble(std::vector<FiniteTimeExponent> ok, std::vector<TaskFailure> failures,
                                 bool allow_partial, const std::string& who) {
  if (!failures.empty() && !allow_partial) {
    std::string msg = who + ": " + std::to_string(failures.size()) + " trajectories failed;";
    for (const auto& f : failures) msg += " [id " + std::to_string(f.id) + "] " + f.message;
    throw NumericalError(msg);
  }
  EnsembleEstimate est = aggregate(std::move(ok));
  est.partial = !failures.empty();
  for (auto& f : failures) {
    est.failed_ids.push_back(f.id);
    est.failure_messages.push_back(std::move(f.message));
  }
  return est;
}

EnsembleEstimate ensemble_lyapunov(const Wavefunction& psi0, const Hamiltonian& ham, const MeasurementConfig& meas,
                                   const PropagatorConfig& cfg, const LyapunovConfig& lcfg,
                                   std::uint64_t master_seed, std::size_t n_traj, const EnsembleOptions& opts,
                                   std::vector<TrajectoryResult>* per_trajectory) {
  if (n_traj < 2) throw std::invalid_argument("ensemble_lyapunov: need at least 2 trajectories");
  const SplitStepper stepper(psi0.grid, ham, cfg);

  std::vector<TrajectoryResult> results(n_traj);
  auto failures = for_each_trajectory(n_traj, opts.workers, [&](std::size_t id) {
    const std::uint64_t stream_id = opts.force_same_seed ? 0 : id;
    const NoiseStream noise(master_seed, stream_id, cfg.dt);
    LyapunovPair pair(stepper, meas.k, lcfg, psi0, id);
    pair.advance(pair.total_steps(), stream_source(noise));
    results[id] = TrajectoryResult{pair.exponent(), pair.divergence(), pair.reseed_count()};
  });

  std::vector<FiniteTimeExponent> ok;
  std::size_t f = 0;
  for (std::size_t id = 0; id < n_traj; ++id) {
    if (f < failures.size() && failures[f].id == id)
      ++f;
    else
      ok.push_back(results[id].exponent);
  }
  EnsembleEstimate est = finish_ensemble(std::move(ok), std::move(failures), opts.allow_partial, "ensemble_lyapunov");
  if (per_trajectory) *per_trajectory = std::move(results);
  return est;
}

}  // namespace qlyap
