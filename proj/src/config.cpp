#include "qlyap/config.hpp"

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qlyap/errors.hpp"

namespace qlyap {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    bad(key, "expected a finite number, got '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    bad(key, "expected a non-negative integer, got '" + s + "'");
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    bad(key, "expected an integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  bad(key, "expected true or false, got '" + s + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  return out;
}

std::string from_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::optional<double> to_auto(const std::string& key, const std::string& s) {
  if (s == "auto") return std::nullopt;
  return to_double(key, s);
}

std::string from_auto(const std::optional<double>& v) { return v ? format_double(*v) : "auto"; }

struct Field {
  ConfigKey key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define QLYAP_DOUBLE(name, member, physics, help)                                       \
  Field {                                                                               \
    {name, physics, help}, [](const RunConfig& c) { return format_double(c.member); }, \
        [](RunConfig& c, const std::string& s) { c.member = to_double(name, s); }       \
  }
#define QLYAP_UINT(name, member, physics, help)                                                                  \
  Field {                                                                                                        \
    {name, physics, help}, [](const RunConfig& c) { return std::to_string(c.member); },                         \
        [](RunConfig& c, const std::string& s) { c.member = static_cast<decltype(c.member)>(to_u64(name, s)); } \
  }
#define QLYAP_BOOL(name, member, physics, help)                                               \
  Field {                                                                                     \
    {name, physics, help}, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& s) { c.member = to_bool(name, s); }               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f{
      QLYAP_DOUBLE("hbar", duffing.hbar, true, "effective Planck constant"),
      QLYAP_DOUBLE("mass", duffing.mass, true, "particle mass m"),
      QLYAP_DOUBLE("A", duffing.A, true, "quadratic coefficient in -A x^2"),
      QLYAP_DOUBLE("B", duffing.B, true, "quartic coefficient in B x^4"),
      QLYAP_DOUBLE("Lambda", duffing.Lambda, true, "drive amplitude"),
      QLYAP_DOUBLE("omega", duffing.omega, true, "drive angular frequency"),
      QLYAP_DOUBLE("x_min", x_min, true, "left edge of the periodic grid"),
      QLYAP_DOUBLE("x_max", x_max, true, "right edge of the periodic grid"),
      QLYAP_UINT("n_points", n_points, true, "grid points (power of two, >= 16)"),
      QLYAP_UINT("steps_per_period", steps_per_period, true, "time steps per drive period (>= 100)"),
      QLYAP_BOOL("midpoint_drive", midpoint_drive, true, "evaluate the drive at the step midpoint"),
      QLYAP_DOUBLE("k", k, true, "measurement strength"),
      Field{{"k_sweep", true, "comma-separated k values for sweep (empty: k)"},
            [](const RunConfig& c) { return from_list(c.k_sweep); },
            [](RunConfig& c, const std::string& s) { c.k_sweep = to_list("k_sweep", s); }},
      Field{{"x0", true, "initial <x> (auto: right well minimum)"},
            [](const RunConfig& c) { return from_auto(c.x0); },
            [](RunConfig& c, const std::string& s) { c.x0 = to_auto("x0", s); }},
      QLYAP_DOUBLE("p0", p0, true, "initial <p>"),
      Field{{"sigma_x", true, "initial width (auto: well ground-state width)"},
            [](const RunConfig& c) { return from_auto(c.sigma_x); },
            [](RunConfig& c, const std::string& s) { c.sigma_x = to_auto("sigma_x", s); }},
      QLYAP_DOUBLE("delta0", delta0, true, "separation kept between the Lyapunov pair"),
      QLYAP_DOUBLE("renorm_periods", renorm_periods, true, "renormalization interval in periods"),
      QLYAP_DOUBLE("t_max_periods", t_max_periods, true, "run length in periods, warmup included"),
      QLYAP_DOUBLE("warmup_periods", warmup_periods, true, "transient excluded from exponents and maps"),
      Field{{"direction", true, "separation measure: phase-space or x-only"},
            [](const RunConfig& c) { return to_string(c.direction); },
            [](RunConfig& c, const std::string& s) {
              try {
                c.direction = parse_direction_policy(s);
              } catch (const std::invalid_argument& e) {
                bad("direction", e.what());
              }
            }},
      Field{{"renorm", true, "renormalization: rescale-difference or displace-fiducial"},
            [](const RunConfig& c) { return to_string(c.renorm); },
            [](RunConfig& c, const std::string& s) {
              try {
                c.renorm = parse_renorm_policy(s);
              } catch (const std::invalid_argument& e) {
                bad("renorm", e.what());
              }
            }},
      QLYAP_DOUBLE("p_weight", p_weight, true, "weight of the momentum offset in the separation"),
      QLYAP_DOUBLE("D_p", D_p, true, "classical momentum diffusion"),
      QLYAP_UINT("master_seed", master_seed, true, "noise master seed"),
      QLYAP_UINT("trajectory_id", trajectory_id, true, "realization for single-trajectory commands"),
      QLYAP_DOUBLE("strobe_phase", strobe_phase, true, "strobe sampling phase as a fraction of T"),
      QLYAP_UINT("n_trajectories", n_trajectories, false, "ensemble size"),
      Field{{"workers", false, "threads (0: all, 1: serial)"},
            [](const RunConfig& c) { return std::to_string(c.workers); },
            [](RunConfig& c, const std::string& s) { c.workers = to_int("workers", s); }},
      QLYAP_BOOL("allow_partial", allow_partial, false, "keep going when trajectories fail"),
      Field{{"output_dir", false, "directory for all outputs"},
            [](const RunConfig& c) { return c.output_dir; },
            [](RunConfig& c, const std::string& s) { c.output_dir = s; }},
      QLYAP_BOOL("per_trajectory_csv", per_trajectory_csv, false, "write one CSV per trajectory"),
      QLYAP_BOOL("write_record", write_record, false, "save the measurement record (simulate)"),
      QLYAP_DOUBLE("checkpoint_periods", checkpoint_periods, false, "snapshot cadence in periods (0: off)"),
      QLYAP_UINT("sample_every", sample_every, false, "steps between simulate samples"),
      QLYAP_UINT("strobe_periods", strobe_periods, false, "number of stroboscopic samples"),
      QLYAP_UINT("hist_bins", hist_bins, false, "position histogram bins"),
      QLYAP_UINT("density_bins", density_bins, false, "bins per axis of the strobe density"),
      QLYAP_DOUBLE("hist_window_periods", hist_window_periods, false, "window of the averaged histogram"),
  };
  return f;
}

#undef QLYAP_DOUBLE
#undef QLYAP_UINT
#undef QLYAP_BOOL

bool whole_steps(double periods, std::size_t steps_per_period) {
  const double n = periods * static_cast<double>(steps_per_period);
  return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

GridSpec RunConfig::grid() const { return build_grid(x_min, x_max, n_points, duffing.hbar); }
Hamiltonian RunConfig::hamiltonian() const { return duffing_hamiltonian(duffing); }
PropagatorConfig RunConfig::propagator() const { return PropagatorConfig{dt(), midpoint_drive}; }

LyapunovConfig RunConfig::lyapunov() const {
  const double T = period();
  LyapunovConfig l;
  l.delta0 = delta0;
  l.renorm_interval = renorm_periods * T;
  l.t_max = t_max_periods * T;
  l.warmup = warmup_periods * T;
  l.direction = direction;
  l.renorm = renorm;
  l.p_weight = p_weight;
  return l;
}

double RunConfig::initial_x0() const { return x0 ? *x0 : potential_minima(duffing).right; }

double RunConfig::initial_sigma_x() const {
  if (sigma_x) return *sigma_x;
  const double x = initial_x0();
  const double curvature = 12.0 * duffing.B * x * x - 2.0 * duffing.A;
  // Coherent-state width of the local well; falls back to sqrt(hbar/2) where
  // the potential is not convex.
  if (!(curvature > 0.0)) return std::sqrt(duffing.hbar / 2.0);
  const double w = std::sqrt(curvature / duffing.mass);
  return std::sqrt(duffing.hbar / (2.0 * duffing.mass * w));
}

Wavefunction RunConfig::initial_state() const { return gaussian_packet(grid(), initial_x0(), p0, initial_sigma_x()); }

std::vector<double> RunConfig::sweep_values() const { return k_sweep.empty() ? std::vector<double>{k} : k_sweep; }

void RunConfig::validate() const {
  const auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) bad(key, "must be positive (got " + format_double(v) + ")");
  };
  const auto non_negative = [](const char* key, double v) {
    if (!(v >= 0.0)) bad(key, "must be non-negative (got " + format_double(v) + ")");
  };
  positive("hbar", duffing.hbar);
  positive("mass", duffing.mass);
  positive("B", duffing.B);
  positive("omega", duffing.omega);
  if (!(x_max > x_min)) bad("x_max", "must exceed x_min");
  if (n_points < 16 || (n_points & (n_points - 1)) != 0)
    bad("n_points", "must be a power of two >= 16 (got " + std::to_string(n_points) + ")");
  if (steps_per_period < 100) bad("steps_per_period", "must be at least 100 (dt <= T/100)");
  non_negative("k", k);
  for (double v : k_sweep) non_negative("k_sweep", v);
  if (sigma_x) positive("sigma_x", *sigma_x);
  if (!x0 && !(duffing.A > 0.0)) bad("x0", "auto needs a double well (A > 0)");
  positive("delta0", delta0);
  if (delta0 >= 0.1) bad("delta0", "must be small compared with the well separation");
  positive("renorm_periods", renorm_periods);
  if (!whole_steps(renorm_periods, steps_per_period))
    bad("renorm_periods", "must be a whole number of steps at steps_per_period");
  non_negative("warmup_periods", warmup_periods);
  if (!whole_steps(warmup_periods, steps_per_period))
    bad("warmup_periods", "must be a whole number of steps at steps_per_period");
  if (!(t_max_periods >= warmup_periods + renorm_periods))
    bad("t_max_periods", "must cover warmup_periods plus one renormalization interval");
  if (!whole_steps(t_max_periods, steps_per_period))
    bad("t_max_periods", "must be a whole number of steps at steps_per_period");
  positive("p_weight", p_weight);
  non_negative("D_p", D_p);
  if (!(strobe_phase >= 0.0 && strobe_phase < 1.0)) bad("strobe_phase", "must lie in [0, 1)");
  if (n_trajectories < 1) bad("n_trajectories", "must be at least 1");
  if (workers < 0) bad("workers", "must be non-negative");
  non_negative("checkpoint_periods", checkpoint_periods);
  if (checkpoint_periods > 0.0 && !whole_steps(checkpoint_periods, steps_per_period))
    bad("checkpoint_periods", "must be a whole number of steps at steps_per_period");
  if (sample_every < 1) bad("sample_every", "must be at least 1");
  if (strobe_periods < 1) bad("strobe_periods", "must be at least 1");
  if (hist_bins < 1) bad("hist_bins", "must be at least 1");
  if (density_bins < 1) bad("density_bins", "must be at least 1");
  positive("hist_window_periods", hist_window_periods);
  if (output_dir.empty()) bad("output_dir", "must not be empty");
  try {
    initial_state();
  } catch (const std::invalid_argument& e) {
    bad(x0 ? "x0" : "sigma_x", std::string("initial packet not representable: ") + e.what());
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": missing key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) bad(key, "given more than once");
  }
  return out;
}

RunConfig parse_config(const std::map<std::string, std::string>& values) {
  RunConfig cfg;
  std::set<std::string> known;
  for (const auto& f : fields()) known.insert(f.key.name);
  for (const auto& [key, value] : values)
    if (!known.count(key)) bad(key, "unknown key");
  for (const auto& f : fields()) {
    const auto it = values.find(f.key.name);
    if (it != values.end()) f.set(cfg, it->second);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& text) { return parse_config(parse_key_values(text)); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key.name + " = " + f.get(cfg) + "\n";
  return out;
}

std::uint32_t config_hash(const RunConfig& cfg) {
  std::string physics;
  for (const auto& f : fields())
    if (f.key.physics) physics += f.key.name + " = " + f.get(cfg) + "\n";
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(physics.data()), static_cast<uInt>(physics.size())));
}

}  // namespace qlyap
