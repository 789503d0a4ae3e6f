// Serial vs OpenMP wall time for a small Lyapunov ensemble. Also checks that
// both paths give the same estimate bit for bit.
//
//   bench_ensemble [n_trajectories] [t_max_periods] [workers]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "qlyap/config.hpp"
#include "qlyap/lyapunov.hpp"
#include "qlyap/parallel.hpp"

using namespace qlyap;

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 8;
  const double periods = argc > 2 ? std::atof(argv[2]) : 5;
  const int workers = argc > 3 ? std::atoi(argv[3]) : available_workers();

  auto cfg = parse_config("hbar = 16\nk = 0.01\nwarmup_periods = 1");
  cfg.t_max_periods = periods;
  cfg.n_trajectories = n;

  auto run = [&](int w) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto e = ensemble_lyapunov(cfg.initial_state(), cfg.hamiltonian(), {cfg.k}, cfg.propagator(),
                                     cfg.lyapunov(), cfg.master_seed, cfg.n_trajectories, {w, false, false});
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::pair{e, s};
  };
  const auto [serial, ts] = run(1);
  const auto [par, tp] = run(workers);
  std::printf("trajectories %d, %g periods, %zu grid points, %g steps/period\n", n, periods, cfg.n_points,
              static_cast<double>(cfg.steps_per_period));
  std::printf("serial        %8.2f s   lambda %.6f\n", ts, serial.final_mean());
  std::printf("openmp (%2d)   %8.2f s   lambda %.6f   speedup %.2fx\n", workers, tp, par.final_mean(), ts / tp);
  const bool same = serial.final_mean() == par.final_mean() && serial.final_std() == par.final_std();
  std::printf("identical: %s\n", same ? "yes" : "no");
  return same ? 0 : 1;
}
