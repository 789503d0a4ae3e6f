#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qlyap/csv.hpp"
#include "qlyap/errors.hpp"
#include "qlyap/runner.hpp"
#include "qlyap/snapshot.hpp"

using namespace qlyap;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "qlyap_test_runner" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

RunConfig small(const std::string& name, const std::string& extra = "") {
  auto kv = parse_key_values(
      "hbar = 16\nk = 0.02\nt_max_periods = 1\nwarmup_periods = 0.25\nn_trajectories = 3\nper_trajectory_csv = true");
  for (const auto& [key, v] : parse_key_values(extra)) kv[key] = v;
  auto c = parse_config(kv);
  c.output_dir = fresh(name).string();
  return c;
}

}  // namespace

TEST_CASE("simulate writes moments and a replayable record") {
  auto cfg = small("simulate", "sample_every = 50");
  const auto r = simulate(cfg);
  const fs::path dir = cfg.output_dir;
  CHECK(r.steps.front() == 0);
  CHECK(r.steps.back() == 2000);
  CHECK(r.steps.size() == 41);
  REQUIRE(r.record.has_value());
  CHECK(r.record->dy.size() == 2000);
  const auto lines = data_lines(dir / "simulate.csv");
  CHECK(lines.front() == "step,t,mean_x,mean_p,var_x,var_p,energy");
  CHECK(lines.size() == 42);
  CHECK(fs::exists(dir / "record.qrec"));
  CHECK(data_lines(dir / "record.csv").size() == 2001);
  CHECK(slurp(dir / "simulate.csv").rfind("# qlyap ", 0) == 0);

  SUBCASE("replay reproduces <x(t)> within 1e-10") {
    const auto rec = read_record(dir / "record.qrec");
    auto rcfg = cfg;
    rcfg.output_dir = fresh("replay").string();
    const auto rp = replay_run(rec, rcfg);
    REQUIRE(rp.mean_x.size() == r.moments.size());
    double worst = 0;
    for (std::size_t i = 0; i < rp.mean_x.size(); ++i) worst = std::max(worst, std::abs(rp.mean_x[i] - r.moments[i].mean_x));
    CHECK(worst < 1e-10);
    CHECK(fs::exists(fs::path(rcfg.output_dir) / "replay.csv"));
  }
  SUBCASE("a truncated record is rejected") {
    auto rec = *r.record;
    rec.dy.resize(1500);
    CHECK_THROWS_WITH_AS(replay_run(rec, cfg), doctest::Contains("record"), ConfigError);
  }
  SUBCASE("a record taken at another k or dt is rejected") {
    auto rec = *r.record;
    rec.k = 0.03;
    CHECK_THROWS_AS(replay_run(rec, cfg), ConfigError);
    rec = *r.record;
    rec.dt *= 2;
    CHECK_THROWS_AS(replay_run(rec, cfg), ConfigError);
  }
}

TEST_CASE("k = 0 simulate writes no record") {
  auto cfg = small("simulate0", "k = 0");
  const auto r = simulate(cfg);
  CHECK_FALSE(r.record.has_value());
  CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / "record.qrec"));
}

TEST_CASE("ensemble outputs are byte-identical across worker counts") {
  auto a = small("workers1", "workers = 1");
  auto b = small("workers3", "workers = 3");
  const auto ra = run_ensemble(a);
  const auto rb = run_ensemble(b);
  CHECK(ra.estimate.mean_lambda == rb.estimate.mean_lambda);
  for (const char* f : {"lyapunov.csv", "trajectories/traj_0.csv", "trajectories/traj_2.csv"})
    CHECK(slurp(fs::path(a.output_dir) / f) == slurp(fs::path(b.output_dir) / f));
  CHECK(data_lines(fs::path(a.output_dir) / "lyapunov.csv").front() == "t,lambda_mean,lambda_std,n");
  CHECK(data_lines(fs::path(a.output_dir) / "lyapunov.csv").size() == 4);

  SUBCASE("a rerun is byte-identical") {
    auto c = small("workers1b", "workers = 1");
    run_ensemble(c);
    CHECK(slurp(fs::path(a.output_dir) / "lyapunov.csv") == slurp(fs::path(c.output_dir) / "lyapunov.csv"));
  }
}

TEST_CASE("single-k sweep equals run_ensemble") {
  auto s = small("sweep", "k_sweep = 0.02");
  const auto sw = run_sweep(s);
  REQUIRE(sw.rows.size() == 1);
  const auto e = run_ensemble(small("sweep_ref"));
  CHECK(sw.rows[0].lambda_mean == e.estimate.final_mean());
  CHECK(sw.rows[0].lambda_std == e.estimate.final_std());
  CHECK(sw.rows[0].n_trajectories == 3);
  const auto lines = data_lines(fs::path(s.output_dir) / "sweep.csv");
  CHECK(lines.front() == "k,lambda_mean,lambda_std,n,hbar,t_max,partial");
  CHECK(lines.size() == 2);
  CHECK(fs::exists(fs::path(s.output_dir) / "k_0.02" / "lyapunov.csv"));
}

TEST_CASE("checkpointed runs resume bitwise") {
  auto ref = small("resume_ref");
  const auto whole = run_ensemble(ref);

  auto cfg = small("resume", "checkpoint_periods = 0.25");
  const fs::path dir = cfg.output_dir;
  // Emulate an interruption: only mid-run snapshots exist.
  const SplitStepper st(cfg.grid(), cfg.hamiltonian(), cfg.propagator());
  for (std::uint64_t id = 0; id < 2; ++id) {
    LyapunovPair p(st, cfg.k, cfg.lyapunov(), cfg.initial_state(), id);
    p.advance(1000, stream_source(NoiseStream(cfg.master_seed, id, cfg.dt())));
    fs::create_directories(dir / "checkpoints");
    write_snapshot(dir / "checkpoints" / ("traj_" + std::to_string(id) + ".qsnp"),
                   make_snapshot(p, config_hash(cfg), cfg.master_seed));
  }
  const auto resumed = resume_ensemble(cfg);
  CHECK(resumed.resumed == 2);
  CHECK(resumed.estimate.mean_lambda == whole.estimate.mean_lambda);
  CHECK(resumed.estimate.std_lambda == whole.estimate.std_lambda);
  CHECK(data_lines(dir / "lyapunov.csv") == data_lines(fs::path(ref.output_dir) / "lyapunov.csv"));

  SUBCASE("resuming with an altered k is a config error") {
    auto other = cfg;
    other.k = 0.03;
    CHECK_THROWS_AS(resume_ensemble(other), ConfigError);
  }
  SUBCASE("a corrupted snapshot is an integrity error") {
    const auto p = dir / "checkpoints" / "traj_1.qsnp";
    fs::resize_file(p, fs::file_size(p) - 1);
    CHECK_THROWS_AS(resume_ensemble(cfg), IntegrityError);
  }
}

TEST_CASE("resume without snapshots is a config error") {
  CHECK_THROWS_AS(resume_ensemble(small("resume_none")), ConfigError);
}

TEST_CASE("a failing trajectory is isolated when partial results are allowed") {
  // Strong backaction on a narrow grid: some members heat off the grid
  // within one period (ids 1, 3, 4, 5 at seed 12345), others survive.
  const std::string harsh = "hbar = 1\nx_min = -6\nx_max = 6\nn_points = 256\nk = 100\nn_trajectories = 6\n";
  CHECK_THROWS_AS(run_ensemble(small("strict", harsh)), NumericalError);
  auto cfg = small("partial", harsh + "allow_partial = true");
  const auto r = run_ensemble(cfg);
  CHECK(r.estimate.partial);
  CHECK(r.estimate.n_trajectories == 2);
  CHECK(r.estimate.failed_ids == std::vector<std::uint64_t>{1, 3, 4, 5});
  CHECK(r.estimate.failure_messages[0].find("widen the grid") != std::string::npos);
  CHECK(data_lines(fs::path(cfg.output_dir) / "failures.csv").size() == 5);
}

TEST_CASE("strobe, histogram and classical outputs") {
  auto cfg = small("maps", "hbar = 1\nk = 1\nstrobe_periods = 4\nwarmup_periods = 1\nhist_window_periods = 0.5\n"
                           "t_max_periods = 2\ndensity_bins = 3\nhist_bins = 30");
  const fs::path dir = cfg.output_dir;
  const auto s = run_strobe(cfg);
  CHECK(s.points.size() == 4);
  CHECK(data_lines(dir / "strobe.csv").size() == 5);
  CHECK(data_lines(dir / "strobe_density.csv").size() == 10);

  const auto h = run_histogram(cfg);
  CHECK(h.snapshot.density.size() == 30);
  CHECK(h.mean_var_x > 0);
  CHECK(data_lines(dir / "histogram_window.csv").front() == "bin_left,bin_right,density");

  const auto c = run_classical(cfg);
  CHECK(c.strobe.size() == 4);
  CHECK(data_lines(dir / "classical_lyapunov.csv").front() == "t,lambda");
  CHECK(data_lines(dir / "classical_strobe.csv").size() == 5);
}

TEST_CASE("provenance omits execution-only keys") {
  auto cfg = small("prov");
  cfg.workers = 5;
  std::string all;
  for (const auto& line : provenance(cfg, "lyapunov")) all += line + "\n";
  CHECK(all.find("workers") == std::string::npos);
  CHECK(all.find("output_dir") == std::string::npos);
  CHECK(all.find("k = 0.02") != std::string::npos);
  CHECK(all.find("philox4x32-10") != std::string::npos);
  CHECK(all.find("config_hash") != std::string::npos);
}

TEST_CASE("CsvWriter") {
  const auto p = fresh("csv") / "sub" / "t.csv";
  CsvWriter w(p, {"note"}, {"a", "b"});
  w.cell(0.1).cell(std::string("x,\"y\""));
  w.end_row();
  w.cell(std::uint64_t{3});
  CHECK_THROWS_AS(w.end_row(), std::logic_error);
  w.cell(1.0);
  w.end_row();
  w.close();
  CHECK(slurp(p) == "# note\na,b\n0.1,\"x,\"\"y\"\"\"\n3,1\n");
}
