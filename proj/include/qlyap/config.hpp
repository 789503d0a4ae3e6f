#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlyap/classical.hpp"
#include "qlyap/grid_state.hpp"
#include "qlyap/lyapunov.hpp"
#include "qlyap/propagator.hpp"

namespace qlyap {

inline constexpr const char* kVersion = "0.3.0";

// Everything a run needs. Times are given in drive periods T = 2 pi/omega
// so that the defaults stay meaningful when omega changes.
struct RunConfig {
  // physics
  DuffingParams duffing{.hbar = 16.0};
  double x_min = -15.0;
  double x_max = 15.0;
  std::size_t n_points = 512;
  std::size_t steps_per_period = 2000;
  bool midpoint_drive = true;
  double k = 0.0;
  std::vector<double> k_sweep;  // empty: sweep runs the single k
  std::optional<double> x0;       // unset: right well minimum
  double p0 = 0.0;
  std::optional<double> sigma_x;  // unset: ground-state width of the well
  double delta0 = 1e-6;
  double renorm_periods = 0.25;
  double t_max_periods = 500.0;  // total, warmup included
  double warmup_periods = 20.0;
  DirectionPolicy direction = DirectionPolicy::phase_space;
  RenormPolicy renorm = RenormPolicy::rescale_difference;
  double p_weight = 1.0;
  double D_p = 0.0;  // classical momentum diffusion
  std::uint64_t master_seed = 12345;
  std::uint64_t trajectory_id = 0;  // simulate / strobe / histogram / classical
  double strobe_phase = 0.0;       // fraction of T

  // execution and outputs (not part of the config hash)
  std::size_t n_trajectories = 32;
  int workers = 0;
  bool allow_partial = false;
  std::string output_dir = "out";
  bool per_trajectory_csv = false;
  bool write_record = true;
  double checkpoint_periods = 0.0;  // 0: no checkpoints
  std::size_t sample_every = 100;   // steps between simulate samples
  std::size_t strobe_periods = 200;
  std::size_t hist_bins = 120;
  std::size_t density_bins = 40;
  double hist_window_periods = 10.0;

  double period() const { return duffing.period(); }
  double dt() const { return period() / static_cast<double>(steps_per_period); }
  GridSpec grid() const;
  Hamiltonian hamiltonian() const;
  PropagatorConfig propagator() const;
  LyapunovConfig lyapunov() const;
  double initial_x0() const;
  double initial_sigma_x() const;
  Wavefunction initial_state() const;
  std::vector<double> sweep_values() const;

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

// key = value lines; '#' starts a comment. Unknown and repeated keys are
// errors. Missing keys take the defaults above.
RunConfig parse_config(const std::string& text);
RunConfig parse_config(const std::map<std::string, std::string>& values);
std::map<std::string, std::string> parse_key_values(const std::string& text);
RunConfig load_config(const std::string& path);

// Every key, in schema order, values printed so that parsing them back
// reproduces the config exactly.
std::string emit_config(const RunConfig& cfg);

// CRC-32 of the emitted physics keys: two configs that produce the same
// trajectories hash equal, whatever their output settings.
std::uint32_t config_hash(const RunConfig& cfg);

struct ConfigKey {
  std::string name;
  bool physics;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace qlyap
