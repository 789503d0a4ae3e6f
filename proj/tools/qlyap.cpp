// qlyap command-line driver. Every config key is also a --key flag; a key
// set both in --config and on the command line is rejected.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qlyap/config.hpp"
#include "qlyap/errors.hpp"
#include "qlyap/runner.hpp"

using namespace qlyap;

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> flags;
  bool dry_run = false;
};

void add_config_flags(Command& c) {
  c.app->add_option("-c,--config", c.config_path, "key = value config file");
  c.app->add_flag("--dry-run", c.dry_run, "print the normalized config and exit");
  for (const auto& key : config_keys()) {
    auto* opt = c.app->add_option_function<std::string>(
        "--" + key.name, [&c, name = key.name](const std::string& v) { c.flags[name] = v; }, key.help);
    opt->group(key.physics ? "Physics" : "Execution");
  }
}

RunConfig resolve(const Command& c) {
  std::map<std::string, std::string> values;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw ConfigError("cannot read config file " + c.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    values = parse_key_values(ss.str());
  }
  for (const auto& [k, v] : c.flags)
    if (!values.emplace(k, v).second)
      throw ConfigError(k + ": set both in " + c.config_path + " and on the command line");
  return parse_config(values);
}

void print_ensemble(const EnsembleRun& r) {
  const auto& e = r.estimate;
  std::printf("k = %s  lambda = %.6g +- %.6g  (n = %zu%s%s)\n", format_double(r.k).c_str(), e.final_mean(),
              e.final_std(), e.n_trajectories, e.partial ? ", partial" : "",
              r.resumed ? (", " + std::to_string(r.resumed) + " resumed").c_str() : "");
  for (std::size_t i = 0; i < e.failed_ids.size(); ++i)
    std::fprintf(stderr, "trajectory %llu failed: %s\n", static_cast<unsigned long long>(e.failed_ids[i]),
                 e.failure_messages[i].c_str());
}

int run(int argc, char** argv) {
  CLI::App app{"Continuously observed Duffing oscillator: trajectories, Lyapunov exponents, maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::map<std::string, Command> cmds;
  const std::pair<const char*, const char*> names[] = {
      {"simulate", "one conditioned trajectory and its measurement record"},
      {"lyapunov", "ensemble of finite-time Lyapunov exponents at k"},
      {"sweep", "ensembles over k_sweep"},
      {"strobe", "stroboscopic (<x>, <p>) map and its density"},
      {"histogram", "position distribution, snapshot and window average"},
      {"classical", "classical Benettin exponent and strobe map"},
      {"replay", "re-integrate a trajectory from a measurement record"},
      {"resume", "continue a checkpointed lyapunov run"},
  };
  for (const auto& [name, help] : names) {
    auto& c = cmds[name];
    c.app = app.add_subcommand(name, help);
    add_config_flags(c);
  }
  std::string record_path;
  bool replay_lyapunov = false;
  cmds["replay"].app->add_option("--record", record_path, "record file written by simulate")->required();
  cmds["replay"].app->add_flag("--lyapunov", replay_lyapunov, "also run a Lyapunov pair on the record");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto& [name, c] : cmds) {
    if (!c.app->parsed()) continue;
    const RunConfig cfg = resolve(c);
    if (c.dry_run) {
      std::cout << emit_config(cfg);
      return 0;
    }
    if (name == "simulate") {
      const auto r = simulate(cfg);
      const auto& m = r.moments.back();
      std::printf("t = %.6g  <x> = %.6g  <p> = %.6g  var_x = %.6g  energy = %.6g\n", r.times.back(), m.mean_x,
                  m.mean_p, m.var_x, m.energy);
    } else if (name == "lyapunov") {
      print_ensemble(run_ensemble(cfg));
    } else if (name == "resume") {
      print_ensemble(resume_ensemble(cfg));
    } else if (name == "sweep") {
      const auto s = run_sweep(cfg);
      for (const auto& row : s.rows)
        std::printf("k = %s  lambda = %.6g +- %.6g  (n = %zu%s)\n", format_double(row.k).c_str(), row.lambda_mean,
                    row.lambda_std, row.n_trajectories, row.partial ? ", partial" : "");
    } else if (name == "strobe") {
      const auto s = run_strobe(cfg);
      const auto b = bounding_box(s.points);
      std::printf("%zu points, box x [%.4g, %.4g] p [%.4g, %.4g]\n", s.points.size(), b.x_min, b.x_max, b.p_min,
                  b.p_max);
    } else if (name == "histogram") {
      const auto h = run_histogram(cfg);
      std::printf("snapshot var_x = %.6g  window var_x = %.6g  time-averaged var_x = %.6g\n", h.snapshot.variance(),
                  h.window.variance(), h.mean_var_x);
    } else if (name == "classical") {
      const auto r = run_classical(cfg);
      std::printf("lambda = %.6g\n", r.exponent.lambda_t.back());
    } else if (name == "replay") {
      const auto r = replay_run(read_record(record_path), cfg, replay_lyapunov);
      std::printf("replayed %llu steps, final <x> = %.12g\n", static_cast<unsigned long long>(r.steps.back()),
                  r.mean_x.back());
      if (r.lyapunov) std::printf("lambda = %.6g\n", r.lyapunov->exponent.lambda_t.back());
    }
    std::printf("outputs in %s\n", cfg.output_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const IntegrityError& e) {
    std::fprintf(stderr, "integrity error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
