#include "qlyap/classical.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "qlyap/errors.hpp"

namespace qlyap {

namespace {

struct Deriv {
  double x, p, dx, dp;
};

Deriv rhs(const Hamiltonian& ham, double x, double p, double dx, double dp, double t) {
  const double inv_m = ham.kinetic ? 1.0 / ham.mass : 0.0;
  return Deriv{p * inv_m, ham.force(x, t), dp * inv_m, -ham.curvature(x) * dx};
}

// Classical RK4 on (x, p, dx, dp); the tangent rides on the same stages.
std::pair<ClassicalState, TangentVector> rk4(const ClassicalState& s, const TangentVector& v, const Hamiltonian& ham,
                                             double dt) {
  const double h2 = 0.5 * dt;
  const Deriv k1 = rhs(ham, s.x, s.p, v.dx, v.dp, s.t);
  const Deriv k2 = rhs(ham, s.x + h2 * k1.x, s.p + h2 * k1.p, v.dx + h2 * k1.dx, v.dp + h2 * k1.dp, s.t + h2);
  const Deriv k3 = rhs(ham, s.x + h2 * k2.x, s.p + h2 * k2.p, v.dx + h2 * k2.dx, v.dp + h2 * k2.dp, s.t + h2);
  const Deriv k4 = rhs(ham, s.x + dt * k3.x, s.p + dt * k3.p, v.dx + dt * k3.dx, v.dp + dt * k3.dp, s.t + dt);
  const double w = dt / 6.0;
  ClassicalState out{s.x + w * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
                     s.p + w * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p), s.t + dt};
  TangentVector tv{v.dx + w * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
                   v.dp + w * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp)};
  return {out, tv};
}

void kick(ClassicalState& s, double dt, double D_p, NoiseStream* noise) {
  if (D_p <= 0.0) return;
  if (noise == nullptr) throw std::invalid_argument("classical_step: D_p > 0 needs a noise stream");
  s.p += std::sqrt(2.0 * D_p * dt) * noise->standard_normal(noise->counter());
  noise->seek(noise->counter() + 1);
}

std::optional<NoiseStream> make_stream(const ClassicalNoiseConfig& n, double dt) {
  if (n.D_p < 0.0) throw std::invalid_argument("ClassicalNoiseConfig: D_p must be non-negative");
  if (n.D_p == 0.0) return std::nullopt;
  return NoiseStream(n.seed, n.trajectory_id, dt);
}

void validate(const BenettinConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("benettin: dt must be positive");
  if (!(cfg.renorm_interval >= cfg.dt)) throw std::invalid_argument("benettin: renorm_interval must be >= dt");
  if (!(cfg.t_max >= cfg.renorm_interval)) throw std::invalid_argument("benettin: t_max must be >= renorm_interval");
  if (!(cfg.transient >= 0.0)) throw std::invalid_argument("benettin: transient must be non-negative");
}

}  // namespace

ClassicalState classical_step(const ClassicalState& s, const Hamiltonian& ham, double dt, double D_p,
                              NoiseStream* noise) {
  auto [out, tv] = rk4(s, TangentVector{}, ham, dt);
  kick(out, dt, D_p, noise);
  return out;
}

TangentVector tangent_step(const ClassicalState& s, const TangentVector& v, const Hamiltonian& ham, double dt) {
  return rk4(s, v, ham, dt).second;
}

std::pair<ClassicalState, TangentVector> joint_step(const ClassicalState& s, const TangentVector& v,
                                                   const Hamiltonian& ham, double dt, double D_p,
                                                   NoiseStream* noise) {
  auto r = rk4(s, v, ham, dt);
  kick(r.first, dt, D_p, noise);
  return r;
}

double classical_energy(const ClassicalState& s, const Hamiltonian& ham) {
  const double kinetic = ham.kinetic ? s.p * s.p / (2.0 * ham.mass) : 0.0;
  return kinetic + ham.potential(s.x, s.t);
}

FiniteTimeExponent benettin_lyapunov(const ClassicalState& s0, const Hamiltonian& ham, const BenettinConfig& cfg) {
  validate(cfg);
  auto stream = make_stream(cfg.noise, cfg.dt);
  NoiseStream* noise = stream ? &*stream : nullptr;
  const std::uint64_t transient_steps = steps_between(0.0, cfg.transient, cfg.dt);
  const std::uint64_t renorm_steps = steps_between(0.0, cfg.renorm_interval, cfg.dt);
  const std::uint64_t total_steps = steps_between(0.0, cfg.t_max, cfg.dt);

  ClassicalState s = s0;
  for (std::uint64_t i = 0; i < transient_steps; ++i) s = classical_step(s, ham, cfg.dt, cfg.noise.D_p, noise);

  FiniteTimeExponent fte;
  fte.trajectory_id = cfg.noise.trajectory_id;
  TangentVector v{1.0, 0.0};
  double acc = 0.0;
  const double t_start = s.t;
  for (std::uint64_t i = 1; i <= total_steps; ++i) {
    std::tie(s, v) = joint_step(s, v, ham, cfg.dt, cfg.noise.D_p, noise);
    if (i % renorm_steps == 0 || i == total_steps) {
      const double n = std::hypot(v.dx, v.dp);
      if (!std::isfinite(n) || n > 1e300)
        throw NumericalError("benettin: tangent overflow at t = " + diag(s.t) +
                             "; shorten renorm_interval");
      if (n == 0.0) throw NumericalError("benettin: tangent collapsed to zero");
      acc += std::log(n);
      v.dx /= n;
      v.dp /= n;
      fte.times.push_back(s.t - t_start);
      fte.lambda_t.push_back(acc / (s.t - t_start));
    }
  }
  return fte;
}

FiniteTimeExponent finite_difference_lyapunov(const ClassicalState& s0, const Hamiltonian& ham,
                                              const BenettinConfig& cfg, double d0) {
  validate(cfg);
  if (!(d0 > 0.0)) throw std::invalid_argument("finite_difference_lyapunov: d0 must be positive");
  auto stream_a = make_stream(cfg.noise, cfg.dt);
  NoiseStream* noise_a = stream_a ? &*stream_a : nullptr;
  const std::uint64_t transient_steps = steps_between(0.0, cfg.transient, cfg.dt);
  const std::uint64_t renorm_steps = steps_between(0.0, cfg.renorm_interval, cfg.dt);
  const std::uint64_t total_steps = steps_between(0.0, cfg.t_max, cfg.dt);

  ClassicalState a = s0;
  for (std::uint64_t i = 0; i < transient_steps; ++i) a = classical_step(a, ham, cfg.dt, cfg.noise.D_p, noise_a);
  // The partner replays the fiducial's kicks by stepping a copy of its stream.
  std::optional<NoiseStream> stream_b = stream_a;
  NoiseStream* noise_b = stream_b ? &*stream_b : nullptr;
  ClassicalState b{a.x + d0, a.p, a.t};

  FiniteTimeExponent fte;
  fte.trajectory_id = cfg.noise.trajectory_id;
  double acc = 0.0;
  const double t_start = a.t;
  for (std::uint64_t i = 1; i <= total_steps; ++i) {
    a = classical_step(a, ham, cfg.dt, cfg.noise.D_p, noise_a);
    b = classical_step(b, ham, cfg.dt, cfg.noise.D_p, noise_b);
    if (i % renorm_steps == 0 || i == total_steps) {
      const double dx = b.x - a.x;
      const double dp = b.p - a.p;
      const double d = std::hypot(dx, dp);
      if (!(d > 0.0) || !std::isfinite(d)) throw NumericalError("finite_difference_lyapunov: degenerate separation");
      acc += std::log(d / d0);
      b = ClassicalState{a.x + dx * d0 / d, a.p + dp * d0 / d, a.t};
      fte.times.push_back(a.t - t_start);
      fte.lambda_t.push_back(acc / (a.t - t_start));
    }
  }
  return fte;
}

std::vector<std::pair<double, double>> classical_strobe(const ClassicalState& s0, const Hamiltonian& ham, double dt,
                                                        std::size_t n_periods, const ClassicalNoiseConfig& noise_cfg) {
  std::vector<std::pair<double, double>> pts;
  if (n_periods == 0) return pts;
  if (!(ham.drive_frequency > 0.0)) throw std::invalid_argument("classical_strobe: needs a drive frequency");
  const double period = 2.0 * std::numbers::pi / ham.drive_frequency;
  const std::uint64_t per = steps_between(0.0, period, dt);
  auto stream = make_stream(noise_cfg, dt);
  NoiseStream* noise = stream ? &*stream : nullptr;
  ClassicalState s = s0;
  pts.reserve(n_periods);
  for (std::size_t n = 0; n < n_periods; ++n) {
    for (std::uint64_t i = 0; i < per; ++i) s = classical_step(s, ham, dt, noise_cfg.D_p, noise);
    pts.emplace_back(s.x, s.p);
  }
  return pts;
}

}  // namespace qlyap
