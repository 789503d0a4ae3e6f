#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "qlyap/analysis.hpp"
#include "qlyap/config.hpp"
#include "qlyap/lyapunov.hpp"
#include "qlyap/noise.hpp"

namespace qlyap {

// Every operation validates cfg, writes its CSVs under cfg.output_dir (or
// the directory given) and returns the numbers it wrote.

struct SimulateResult {
  std::vector<std::uint64_t> steps;  // sampled every cfg.sample_every steps, step 0 included
  std::vector<double> times;
  std::vector<Expectations> moments;
  std::optional<MeasurementRecord> record;  // k > 0 only
  Wavefunction final_state;
};

// One conditioned trajectory (realization cfg.trajectory_id) over
// t_max_periods. Writes simulate.csv and, if k > 0 and write_record,
// record.qrec and record.csv.
SimulateResult simulate(const RunConfig& cfg);

struct EnsembleRun {
  double k = 0.0;
  EnsembleEstimate estimate;
  std::vector<TrajectoryResult> trajectories;  // by id; empty entries for failed ids
  std::size_t resumed = 0;                     // trajectories continued from a snapshot
};

// Lyapunov pairs for ids 0..n_trajectories-1 at measurement strength k.
// Writes lyapunov.csv (t, lambda_mean, lambda_std, n), trajectories/ when
// per_trajectory_csv, failures.csv for a partial ensemble, and with
// checkpoint_periods > 0 a snapshot per trajectory in checkpoints/.
// With resume = true existing snapshots are continued instead of restarting.
EnsembleRun run_ensemble(const RunConfig& cfg, double k, const std::filesystem::path& dir, bool resume = false);
inline EnsembleRun run_ensemble(const RunConfig& cfg) { return run_ensemble(cfg, cfg.k, cfg.output_dir); }

// Continues an interrupted run_ensemble from its checkpoints. Throws
// ConfigError if no snapshot exists.
EnsembleRun resume_ensemble(const RunConfig& cfg);

struct SweepRow {
  double k;
  double lambda_mean;
  double lambda_std;
  std::size_t n_trajectories;
  bool partial;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double hbar = 0.0;
  double t_max = 0.0;
  bool partial = false;
};

// run_ensemble for each value of sweep_values() into k_<value>/, then the
// table sweep.csv (k, lambda_mean, lambda_std, n, hbar, t_max, partial).
SweepResult run_sweep(const RunConfig& cfg);

// Stroboscopic (<x>, <p>) after warmup_periods for strobe_periods periods:
// strobe.csv (period_index, mean_x, mean_p) and strobe_density.csv
// (x_bin, p_bin, relative_density).
StrobeSet run_strobe(const RunConfig& cfg);

struct HistogramResult {
  Histogram snapshot;  // final state
  Histogram window;    // average over the last hist_window_periods
  double mean_var_x = 0.0;  // time average of Var(x) over the same window
};

// histogram_snapshot.csv and histogram_window.csv (bin_left, bin_right, density).
HistogramResult run_histogram(const RunConfig& cfg);

struct ClassicalResult {
  FiniteTimeExponent exponent;
  std::vector<PhasePoint> strobe;
};

// Benettin exponent from (x0, p0) with momentum diffusion D_p:
// classical_lyapunov.csv (t, lambda) and classical_strobe.csv
// (period_index, x, p).
ClassicalResult run_classical(const RunConfig& cfg);

struct ReplayResult {
  std::vector<std::uint64_t> steps;
  std::vector<double> times;
  std::vector<double> mean_x;
  std::optional<TrajectoryResult> lyapunov;
};

// Integrates the trajectory whose measurement term is driven by `record`
// (replay.csv: step, t, mean_x). With lyapunov = true the reconstructed
// fiducial trajectory also drives a Lyapunov pair (replay_lyapunov.csv).
// Throws ConfigError if the record's (k, dt) differ from cfg or it is
// shorter than t_max_periods.
ReplayResult replay_run(const MeasurementRecord& record, const RunConfig& cfg, bool lyapunov = false);

}  // namespace qlyap
