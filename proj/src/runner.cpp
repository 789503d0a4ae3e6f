#include "qlyap/runner.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qlyap/classical.hpp"
#include "qlyap/csv.hpp"
#include "qlyap/errors.hpp"
#include "qlyap/parallel.hpp"
#include "qlyap/snapshot.hpp"

namespace qlyap {

namespace fs = std::filesystem;

namespace {

std::uint64_t period_steps(const RunConfig& cfg, double periods) {
  return static_cast<std::uint64_t>(std::llround(periods * static_cast<double>(cfg.steps_per_period)));
}

// The single-k view of a config: what a sweep member hashes and records as.
RunConfig with_k(const RunConfig& cfg, double k) {
  RunConfig c = cfg;
  c.k = k;
  c.k_sweep.clear();
  return c;
}

void write_exponent_csv(const fs::path& path, const std::vector<std::string>& prov, const TrajectoryResult& r) {
  CsvWriter w(path, prov, {"t", "lambda", "delta", "delta_x"});
  const auto& d = r.divergence;
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    w.cell(d.times[i]).cell(r.exponent.lambda_t[i]).cell(d.delta_values[i]).cell(d.delta_x[i]);
    w.end_row();
  }
  w.close();
}

fs::path snapshot_path(const fs::path& dir, std::size_t id) {
  return dir / "checkpoints" / ("traj_" + std::to_string(id) + ".qsnp");
}

}  // namespace

SimulateResult simulate(const RunConfig& cfg) {
  cfg.validate();
  const auto ham = cfg.hamiltonian();
  const SplitStepper stepper(cfg.grid(), ham, cfg.propagator());
  const double k = cfg.k;
  const double dt = cfg.dt();
  NoiseStream noise(cfg.master_seed, cfg.trajectory_id, dt);

  SimulateResult out{{}, {}, {}, std::nullopt, cfg.initial_state()};
  Wavefunction& psi = out.final_state;
  if (k > 0.0) out.record = MeasurementRecord{k, dt, {}, cfg.master_seed, cfg.trajectory_id};
  const std::uint64_t n = period_steps(cfg, cfg.t_max_periods);
  auto sample = [&](std::uint64_t i) {
    out.steps.push_back(i);
    out.times.push_back(psi.time);
    out.moments.push_back(expectations(psi, ham, psi.time));
  };
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i % cfg.sample_every == 0) sample(i);
    const double dW = k > 0.0 ? noise.next() : 0.0;
    const auto r = stepper.sse_step(psi, k, dW);
    check_boundary(psi);
    if (out.record) record_append(*out.record, r.pre_mean_x, dt, k, dW);
  }
  sample(n);

  const fs::path dir = cfg.output_dir;
  CsvWriter w(dir / "simulate.csv", provenance(cfg, "simulate"),
              {"step", "t", "mean_x", "mean_p", "var_x", "var_p", "energy"});
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    const auto& m = out.moments[i];
    w.cell(out.steps[i]).cell(out.times[i]).cell(m.mean_x).cell(m.mean_p).cell(m.var_x).cell(m.var_p).cell(m.energy);
    w.end_row();
  }
  w.close();
  if (out.record && cfg.write_record) {
    write_record(dir / "record.qrec", *out.record);
    write_record_csv(dir / "record.csv", *out.record);
  }
  return out;
}

EnsembleRun run_ensemble(const RunConfig& cfg_in, double k, const fs::path& dir, bool resume) {
  cfg_in.validate();
  if (!(k >= 0.0)) throw ConfigError("k: must be non-negative");
  const RunConfig cfg = with_k(cfg_in, k);
  const auto prov = provenance(cfg, "lyapunov");
  const std::uint32_t hash = config_hash(cfg);
  const SplitStepper stepper(cfg.grid(), cfg.hamiltonian(), cfg.propagator());
  const LyapunovConfig lcfg = cfg.lyapunov();
  const Wavefunction psi0 = cfg.initial_state();
  const std::uint64_t ckpt_steps = period_steps(cfg, cfg.checkpoint_periods);
  const std::size_t n = cfg.n_trajectories;

  // Mismatched or corrupted snapshots are config/IO errors, not trajectory
  // failures, so they are checked here where they can propagate.
  if (resume)
    for (std::size_t id = 0; id < n; ++id)
      if (fs::exists(snapshot_path(dir, id))) restore_pair(read_snapshot(snapshot_path(dir, id)), stepper, lcfg, k, hash);

  EnsembleRun run;
  run.k = k;
  run.trajectories.resize(n);
  std::vector<char> resumed(n, 0);
  auto failures = for_each_trajectory(n, cfg.workers, [&](std::size_t id) {
    const fs::path snap = snapshot_path(dir, id);
    std::optional<LyapunovPair> pair;
    if (resume && fs::exists(snap)) {
      pair.emplace(restore_pair(read_snapshot(snap), stepper, lcfg, k, hash));
      resumed[id] = 1;
    } else {
      pair.emplace(stepper, k, lcfg, psi0, id);
    }
    const auto source = stream_source(NoiseStream(cfg.master_seed, id, stepper.dt()));
    while (!pair->finished()) {
      pair->advance(ckpt_steps ? ckpt_steps : pair->total_steps(), source);
      if (ckpt_steps) {
        fs::create_directories(snap.parent_path());
        write_snapshot(snap, make_snapshot(*pair, hash, cfg.master_seed));
      }
    }
    run.trajectories[id] = TrajectoryResult{pair->exponent(), pair->divergence(), pair->reseed_count()};
  });
  for (char r : resumed) run.resumed += r ? 1 : 0;

  std::vector<FiniteTimeExponent> ok;
  std::size_t f = 0;
  for (std::size_t id = 0; id < n; ++id) {
    if (f < failures.size() && failures[f].id == id) {
      ++f;
      continue;
    }
    ok.push_back(run.trajectories[id].exponent);
    if (cfg.per_trajectory_csv)
      write_exponent_csv(dir / "trajectories" / ("traj_" + std::to_string(id) + ".csv"), prov, run.trajectories[id]);
  }
  if (!failures.empty() && cfg.allow_partial) {
    CsvWriter w(dir / "failures.csv", prov, {"trajectory_id", "message"});
    for (const auto& fl : failures) {
      w.cell(fl.id).cell(fl.message);
      w.end_row();
    }
    w.close();
  }
  run.estimate = finish_ensemble(std::move(ok), std::move(failures), cfg.allow_partial, "run_ensemble");

  CsvWriter w(dir / "lyapunov.csv", prov, {"t", "lambda_mean", "lambda_std", "n"});
  const auto& e = run.estimate;
  for (std::size_t i = 0; i < e.times.size(); ++i) {
    w.cell(e.times[i]).cell(e.mean_lambda[i]).cell(e.std_lambda[i]).cell(std::uint64_t{e.n_trajectories});
    w.end_row();
  }
  w.close();
  return run;
}

EnsembleRun resume_ensemble(const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  bool any = false;
  for (std::size_t id = 0; id < cfg.n_trajectories && !any; ++id) any = fs::exists(snapshot_path(dir, id));
  if (!any) throw ConfigError("output_dir: no snapshots under " + (dir / "checkpoints").string() + " to resume");
  return run_ensemble(cfg, cfg.k, dir, true);
}

SweepResult run_sweep(const RunConfig& cfg) {
  cfg.validate();
  SweepResult out;
  out.hbar = cfg.duffing.hbar;
  out.t_max = cfg.t_max_periods * cfg.period();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double k : cfg.sweep_values()) {
    const fs::path dir = fs::path(cfg.output_dir) / ("k_" + format_double(k));
    try {
      const auto run = run_ensemble(cfg, k, dir);
      const auto& e = run.estimate;
      out.rows.push_back({k, e.final_mean(), e.final_std(), e.n_trajectories, e.partial});
    } catch (const NumericalError&) {
      if (!cfg.allow_partial) throw;
      out.rows.push_back({k, nan, nan, 0, true});
    }
    out.partial = out.partial || out.rows.back().partial;
  }
  CsvWriter w(fs::path(cfg.output_dir) / "sweep.csv", provenance(cfg, "sweep"),
              {"k", "lambda_mean", "lambda_std", "n", "hbar", "t_max", "partial"});
  for (const auto& r : out.rows) {
    w.cell(r.k).cell(r.lambda_mean).cell(r.lambda_std).cell(std::uint64_t{r.n_trajectories});
    w.cell(out.hbar).cell(out.t_max).cell(std::string(r.partial ? "true" : "false"));
    w.end_row();
  }
  w.close();
  return out;
}

StrobeSet run_strobe(const RunConfig& cfg) {
  cfg.validate();
  const double T = cfg.period();
  const SplitStepper stepper(cfg.grid(), cfg.hamiltonian(), cfg.propagator());
  const auto set = stroboscopic_collect(cfg.initial_state(), stepper, {cfg.k},
                                        NoiseStream(cfg.master_seed, cfg.trajectory_id, cfg.dt()),
                                        cfg.warmup_periods * T, cfg.strobe_periods, cfg.strobe_phase * T);
  const fs::path dir = cfg.output_dir;
  const auto prov = provenance(cfg, "strobe");
  CsvWriter w(dir / "strobe.csv", prov, {"period_index", "mean_x", "mean_p"});
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    w.cell(std::uint64_t{set.n_warmup_excluded + 1 + i}).cell(set.points[i].first).cell(set.points[i].second);
    w.end_row();
  }
  w.close();

  const auto d = density2d(set.points, cfg.density_bins, cfg.density_bins);
  auto dprov = prov;
  std::string levels;
  for (std::size_t i = 0; i < d.levels.size(); ++i) levels += (i ? "," : "") + format_double(d.levels[i]);
  dprov.push_back("levels = " + levels);
  CsvWriter dw(dir / "strobe_density.csv", dprov, {"x_bin", "p_bin", "relative_density"});
  for (std::size_t ix = 0; ix < d.nx(); ++ix)
    for (std::size_t ip = 0; ip < d.np(); ++ip) {
      dw.cell(0.5 * (d.x_edges[ix] + d.x_edges[ix + 1])).cell(0.5 * (d.p_edges[ip] + d.p_edges[ip + 1]));
      dw.cell(d.at(ix, ip));
      dw.end_row();
    }
  dw.close();
  return set;
}

HistogramResult run_histogram(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.hist_window_periods > cfg.t_max_periods) throw ConfigError("hist_window_periods: exceeds t_max_periods");
  const auto ham = cfg.hamiltonian();
  const auto grid = cfg.grid();
  const SplitStepper stepper(grid, ham, cfg.propagator());
  const auto edges = uniform_edges(grid.x_min, grid.x_max, cfg.hist_bins);
  const std::uint64_t n = period_steps(cfg, cfg.t_max_periods);
  const std::uint64_t window_start = n - period_steps(cfg, cfg.hist_window_periods);

  HistogramAccumulator acc(edges);
  double var_sum = 0.0;
  NoiseStream noise(cfg.master_seed, cfg.trajectory_id, cfg.dt());
  const auto psi = evolve(cfg.initial_state(), stepper, {cfg.k}, 0.0, static_cast<double>(n) * cfg.dt(), noise,
                          [&](const StepInfo& info, const Wavefunction& s) {
                            const std::uint64_t done = info.step + 1;
                            if (done >= window_start && done % cfg.sample_every == 0) {
                              acc.add(s);
                              var_sum += expectations(s, ham, s.time).var_x;
                            }
                          });
  if (acc.count() == 0) throw ConfigError("sample_every: no samples fall inside hist_window_periods");

  HistogramResult out{position_histogram(psi, edges), acc.result(), var_sum / static_cast<double>(acc.count())};
  const fs::path dir = cfg.output_dir;
  auto prov = provenance(cfg, "histogram");
  for (const auto& [name, h] : {std::pair{"histogram_snapshot.csv", &out.snapshot}, {"histogram_window.csv", &out.window}}) {
    auto p = prov;
    p.push_back("observable = " + h->observable_tag);
    if (h == &out.window) p.push_back("mean_var_x = " + format_double(out.mean_var_x));
    CsvWriter w(dir / name, p, {"bin_left", "bin_right", "density"});
    for (std::size_t i = 0; i < h->density.size(); ++i) {
      w.cell(h->bin_edges[i]).cell(h->bin_edges[i + 1]).cell(h->density[i]);
      w.end_row();
    }
    w.close();
  }
  return out;
}

ClassicalResult run_classical(const RunConfig& cfg) {
  cfg.validate();
  const double T = cfg.period();
  const auto ham = cfg.hamiltonian();
  const ClassicalState s0{cfg.initial_x0(), cfg.p0, 0.0};
  BenettinConfig bc;
  bc.dt = cfg.dt();
  bc.t_max = (cfg.t_max_periods - cfg.warmup_periods) * T;
  bc.renorm_interval = cfg.renorm_periods * T;
  bc.transient = cfg.warmup_periods * T;
  bc.noise = ClassicalNoiseConfig{cfg.D_p, cfg.master_seed, cfg.trajectory_id};
  ClassicalResult out;
  out.exponent = benettin_lyapunov(s0, ham, bc);

  const auto skip = static_cast<std::size_t>(std::ceil(cfg.warmup_periods - 1e-9));
  auto all = classical_strobe(s0, ham, bc.dt, skip + cfg.strobe_periods, bc.noise);
  out.strobe.assign(all.begin() + static_cast<std::ptrdiff_t>(skip), all.end());

  const fs::path dir = cfg.output_dir;
  const auto prov = provenance(cfg, "classical");
  CsvWriter w(dir / "classical_lyapunov.csv", prov, {"t", "lambda"});
  for (std::size_t i = 0; i < out.exponent.times.size(); ++i) {
    w.cell(out.exponent.times[i]).cell(out.exponent.lambda_t[i]);
    w.end_row();
  }
  w.close();
  CsvWriter sw(dir / "classical_strobe.csv", prov, {"period_index", "x", "p"});
  for (std::size_t i = 0; i < out.strobe.size(); ++i) {
    sw.cell(std::uint64_t{skip + 1 + i}).cell(out.strobe[i].first).cell(out.strobe[i].second);
    sw.end_row();
  }
  sw.close();
  return out;
}

ReplayResult replay_run(const MeasurementRecord& record, const RunConfig& cfg, bool lyapunov) {
  cfg.validate();
  const double dt = cfg.dt();
  if (record.k != cfg.k)
    throw ConfigError("k: record was taken at k = " + format_double(record.k) + ", config has " + format_double(cfg.k));
  if (std::abs(record.dt - dt) > 1e-12 * dt)
    throw ConfigError("steps_per_period: record dt = " + format_double(record.dt) + " differs from " +
                      format_double(dt));
  const std::uint64_t n = period_steps(cfg, cfg.t_max_periods);
  if (record.n_steps() < n)
    throw ConfigError("t_max_periods: record holds " + std::to_string(record.n_steps()) + " steps, " +
                      std::to_string(n) + " needed");

  const SplitStepper stepper(cfg.grid(), cfg.hamiltonian(), cfg.propagator());
  ReplayResult out;
  Wavefunction psi = cfg.initial_state();
  for (std::uint64_t i = 0; i < n; ++i) {
    const double m = mean_x(psi);
    if (i % cfg.sample_every == 0) {
      out.steps.push_back(i);
      out.times.push_back(psi.time);
      out.mean_x.push_back(m);
    }
    stepper.sse_step(psi, cfg.k, increment_from_record(record, i, m));
    check_boundary(psi);
  }
  out.steps.push_back(n);
  out.times.push_back(psi.time);
  out.mean_x.push_back(mean_x(psi));

  const fs::path dir = cfg.output_dir;
  const auto prov = provenance(cfg, "replay");
  CsvWriter w(dir / "replay.csv", prov, {"step", "t", "mean_x"});
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    w.cell(out.steps[i]).cell(out.times[i]).cell(out.mean_x[i]);
    w.end_row();
  }
  w.close();

  if (lyapunov) {
    LyapunovPair pair(stepper, cfg.k, cfg.lyapunov(), cfg.initial_state(), record.trajectory_id.value_or(0));
    pair.advance(pair.total_steps(), record_source(record));
    out.lyapunov = TrajectoryResult{pair.exponent(), pair.divergence(), pair.reseed_count()};
    write_exponent_csv(dir / "replay_lyapunov.csv", prov, *out.lyapunov);
  }
  return out;
}

}  // namespace qlyap
