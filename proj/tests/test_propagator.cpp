#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qlyap/errors.hpp"
#include "qlyap/propagator.hpp"

using namespace qlyap;
using doctest::Approx;

namespace {

DuffingParams duffing(double hbar) {
  DuffingParams p;
  p.hbar = hbar;
  return p;
}

Wavefunction well_packet(const GridSpec& g) { return gaussian_packet(g, std::sqrt(10.0), 0, std::sqrt(g.hbar / (2 * std::sqrt(40.0)))); }

}  // namespace

TEST_CASE("PropagatorConfig validation") {
  const auto ham = duffing_hamiltonian(duffing(1));
  const double T = 2 * std::numbers::pi / 6.07;
  CHECK_NOTHROW(PropagatorConfig{T / 100, true}.validate(ham));
  CHECK_THROWS_AS((PropagatorConfig{T / 99, true}.validate(ham)), std::invalid_argument);
  CHECK_THROWS_AS((PropagatorConfig{0, true}.validate(ham)), std::invalid_argument);
  CHECK_NOTHROW(PropagatorConfig{1.0, true}.validate(free_hamiltonian(1)));
}

TEST_CASE("sse_step preserves the norm and k = 0 reduces to unitary_step") {
  const auto g = build_grid(-15, 15, 512, 16);
  const auto ham = duffing_hamiltonian(duffing(16));
  const double dt = duffing(16).period() / 2000;
  const SplitStepper st(g, ham, {dt, true});
  Wavefunction a = well_packet(g), b = a, c = a;
  NoiseStream noise(1, 0, dt);
  for (int i = 0; i < 200; ++i) {
    st.unitary_step(a);
    const auto r = st.sse_step(b, 0.0, 0.0);
    CHECK_FALSE(r.dy.has_value());
    st.sse_step(c, 0.05, noise.next());
    CHECK(std::abs(norm(c) - 1) < 1e-12);
  }
  CHECK(a.amplitudes == b.amplitudes);
  CHECK(a.time == b.time);
  CHECK(std::abs(norm(a) - 1) < 1e-12);
  CHECK(a.time == Approx(200 * dt));
}

TEST_CASE("free-function forms agree with the stepper") {
  const auto g = build_grid(-15, 15, 256, 1);
  const auto ham = duffing_hamiltonian(duffing(1));
  const PropagatorConfig cfg{duffing(1).period() / 500, true};
  const auto psi = well_packet(g);
  const SplitStepper st(g, ham, cfg);
  Wavefunction a = psi;
  a.time = 0.3;
  st.sse_step(a, 0.2, 0.01);
  const auto [b, dy] = sse_step(psi, ham, {0.2}, cfg, 0.3, 0.01);
  CHECK(a.amplitudes == b.amplitudes);
  REQUIRE(dy.has_value());
  CHECK(*dy == Approx(mean_x(psi) * cfg.dt + 0.01 / std::sqrt(8 * 0.2)));
  const auto u = unitary_step(psi, ham, cfg, 0.3);
  CHECK(u.time == Approx(0.3 + cfg.dt));
}

TEST_CASE("dy uses the pre-step <x>") {
  const auto g = build_grid(-15, 15, 256, 1);
  const auto ham = duffing_hamiltonian(duffing(1));
  const double dt = duffing(1).period() / 500;
  const SplitStepper st(g, ham, {dt, true});
  Wavefunction psi = gaussian_packet(g, 1, 4, 0.5);
  const double before = mean_x(psi);
  const auto r = st.sse_step(psi, 0.7, 0.02);
  CHECK(r.pre_mean_x == before);
  CHECK(*r.dy == before * dt + 0.02 / std::sqrt(8 * 0.7));
  CHECK(mean_x(psi) != before);
}

TEST_CASE("midpoint drive: a kinetic-free step is the exact potential phase") {
  const double hbar = 0.5, L = 3, w = 2, dt = 0.01, t = 0.37;
  Hamiltonian h{1.0, 0.1, -0.4, L, w, false};
  const auto g = build_grid(-6, 6, 128, hbar);
  Wavefunction psi = gaussian_packet(g, 0.5, 0, 0.6);
  psi.time = t;
  const auto in = psi;
  SplitStepper(g, h, {dt, true}).unitary_step(psi);
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double x = g.x(j);
    const double V = 0.1 * x * x * x * x - 0.4 * x * x + x * L * std::cos(w * (t + dt / 2));
    const Complex expect = in.amplitudes[j] * std::polar(1.0, -V * dt / hbar);
    CHECK(std::abs(psi.amplitudes[j] - expect) < 1e-13);
  }
  Wavefunction q = in;
  SplitStepper(g, h, {dt, false}).unitary_step(q);
  const double x = g.x(10);
  const double V0 = 0.1 * std::pow(x, 4) - 0.4 * x * x + x * L * std::cos(w * t);
  CHECK(std::abs(q.amplitudes[10] - in.amplitudes[10] * std::polar(1.0, -V0 * dt / hbar)) < 1e-13);
}

TEST_CASE("undriven Duffing conserves energy") {
  auto p = duffing(1);
  p.Lambda = 0;
  const auto ham = duffing_hamiltonian(p);
  const auto g = build_grid(-15, 15, 512, 1);
  const double dt = p.period() / 2000;
  const SplitStepper st(g, ham, {dt, true});
  Wavefunction psi = gaussian_packet(g, 2.0, 1.0, 0.4);
  const double e0 = expectations(psi, ham, 0).energy;
  for (int i = 0; i < 1000; ++i) st.unitary_step(psi);
  const double e1 = expectations(psi, ham, psi.time).energy;
  CHECK(std::abs((e1 - e0) / e0) < 1e-6);
}

TEST_CASE("harmonic oscillator follows the classical orbit") {
  const double hbar = 1, m = 1.5, w0 = 2;
  const auto ham = harmonic_hamiltonian(m, w0);
  const auto g = build_grid(-12, 12, 512, hbar);
  const double x0 = 1.5, p0 = 2.0;
  const double period = 2 * std::numbers::pi / w0;
  const int n = 10000;
  const SplitStepper st(g, ham, {period / n, true});
  Wavefunction psi = gaussian_packet(g, x0, p0, 0.6);
  for (int i = 1; i <= n; ++i) {
    st.unitary_step(psi);
    if (i % 1250 == 0) {
      const double t = psi.time;
      CHECK(std::abs(mean_x(psi) - (x0 * std::cos(w0 * t) + p0 / (m * w0) * std::sin(w0 * t))) < 1e-6);
      CHECK(std::abs(mean_p(psi) - (p0 * std::cos(w0 * t) - m * w0 * x0 * std::sin(w0 * t))) < 1e-6);
    }
  }
}

TEST_CASE("free Gaussian spreads as sigma(t)^2 = sigma^2 + (hbar t / 2 m sigma)^2") {
  const double hbar = 1, m = 1, s = 0.5;
  const auto g = build_grid(-30, 30, 2048, hbar);
  const SplitStepper st(g, free_hamiltonian(m), {0.01, true});
  Wavefunction psi = gaussian_packet(g, -2, 1, s);
  for (int i = 0; i < 300; ++i) st.unitary_step(psi);
  const double t = psi.time;
  const auto e = expectations(psi, free_hamiltonian(m), t);
  CHECK(e.var_x == Approx(s * s + std::pow(hbar * t / (2 * m * s), 2)).epsilon(1e-9));
  CHECK(std::abs(e.mean_x - (-2 + t)) < 1e-9);
}

TEST_CASE("deterministic part is second order") {
  const auto p = duffing(16);
  const auto ham = duffing_hamiltonian(p);
  const auto g = build_grid(-15, 15, 512, 16);
  const double T = p.period();
  auto x_at_T = [&](int n) {
    const SplitStepper st(g, ham, {T / n, true});
    Wavefunction psi = well_packet(g);
    for (int i = 0; i < n; ++i) st.unitary_step(psi);
    return mean_x(psi);
  };
  const double a = x_at_T(100), b = x_at_T(200), c = x_at_T(400);
  const double ratio = (a - b) / (b - c);
  CHECK(ratio == Approx(4).epsilon(0.1));
}

TEST_CASE("measurement substep") {
  const auto g = build_grid(-10, 10, 512, 1);
  const auto psi = gaussian_packet(g, 0.3, 0.5, 0.8);
  SUBCASE("k = 0 is the identity") {
    const auto out = measurement_substep(psi, 0.0, 0.01, 0.3);
    CHECK(out.amplitudes == psi.amplitudes);
  }
  SUBCASE("negative k is rejected") { CHECK_THROWS_AS(measurement_substep(psi, -1, 0.01, 0.1), std::invalid_argument); }
  SUBCASE("positive innovation pulls <x> up, by the Gaussian update formula") {
    const double k = 2, dt = 0.01, dW = 0.05;
    const auto out = measurement_substep(psi, k, dt, dW);
    CHECK(mean_x(out) > mean_x(psi));
    auto gs = oracle::gaussian_from(0.3, 0.5, 0.8);
    oracle::measure(gs, k, dt, dW, 1);
    CHECK(mean_x(out) == Approx(gs.xm).epsilon(1e-10));
    CHECK(mean_p(out) == Approx(gs.pm).epsilon(1e-10));
    CHECK(expectations(out, free_hamiltonian(1), 0).var_x == Approx(gs.var_x()).epsilon(1e-9));
    CHECK(norm(out) == Approx(1).epsilon(1e-12));
  }
  SUBCASE("negative innovation pulls <x> down") {
    CHECK(mean_x(measurement_substep(psi, 2, 0.01, -0.05)) < mean_x(psi));
  }
}

TEST_CASE("conditioned harmonic oscillator matches the Gaussian recursion") {
  const double hbar = 1, m = 1, w0 = 2, k = 1, dt = 0.005;
  const auto ham = harmonic_hamiltonian(m, w0);
  const auto g = build_grid(-10, 10, 256, hbar);
  const SplitStepper st(g, ham, {dt, true});
  Wavefunction psi = gaussian_packet(g, 2, 1, 0.7);
  auto gs = oracle::gaussian_from(2, 1, 0.7);
  NoiseStream noise(5, 1, dt);
  for (int i = 0; i < 400; ++i) {
    const double dW = noise.next();
    st.sse_step(psi, k, dW);
    oracle::step(gs, dt, m, w0, hbar, k, dW);
  }
  const auto e = expectations(psi, ham, psi.time);
  CHECK(std::abs(e.mean_x - gs.xm) < 1e-8);
  CHECK(std::abs(e.mean_p - gs.pm) < 1e-8);
  CHECK(e.var_x == Approx(gs.var_x()).epsilon(1e-8));
  CHECK(e.var_p == Approx(gs.var_p(hbar)).epsilon(1e-8));
}

TEST_CASE("evolve") {
  const auto p = duffing(16);
  const auto ham = duffing_hamiltonian(p);
  const auto g = build_grid(-15, 15, 512, 16);
  const double dt = p.period() / 2000;
  const SplitStepper st(g, ham, {dt, true});
  const auto psi = well_packet(g);

  SUBCASE("zero steps returns the input") {
    NoiseStream n(1, 0, dt);
    const auto out = evolve(psi, st, {0.01}, 0.0, 0.0, n);
    CHECK(out.amplitudes == psi.amplitudes);
    CHECK(n.counter() == 0);
  }
  SUBCASE("composition over a split interval is exact") {
    NoiseStream n1(3, 2, dt), n2(3, 2, dt);
    const double t1 = 300 * dt, t2 = 700 * dt;
    const auto whole = evolve(psi, st, {0.01}, 0.0, t2, n1);
    const auto half = evolve(psi, st, {0.01}, 0.0, t1, n2);
    const auto rest = evolve(half, st, {0.01}, t1, t2, n2);
    CHECK(whole.amplitudes == rest.amplitudes);
    CHECK(n1.counter() == 700);
    CHECK(n2.counter() == 700);
  }
  SUBCASE("two runs are bitwise identical and the observer sees every step") {
    NoiseStream n1(8, 0, dt), n2(8, 0, dt);
    std::vector<double> dy1, dy2;
    std::uint64_t last = 0;
    const auto a = evolve(psi, st, {0.01}, 0, 200 * dt, n1, [&](const StepInfo& i, const Wavefunction&) {
      dy1.push_back(*i.dy);
      last = i.step;
    });
    const auto b = evolve(psi, st, {0.01}, 0, 200 * dt, n2,
                          [&](const StepInfo& i, const Wavefunction&) { dy2.push_back(*i.dy); });
    CHECK(a.amplitudes == b.amplitudes);
    CHECK(dy1 == dy2);
    CHECK(dy1.size() == 200);
    CHECK(last == 199);
  }
  SUBCASE("k = 0 draws no noise") {
    NoiseStream n(1, 0, dt);
    evolve(psi, st, {0.0}, 0, 50 * dt, n);
    CHECK(n.counter() == 0);
  }
  SUBCASE("interval must be a whole number of steps") {
    NoiseStream n(1, 0, dt);
    CHECK_THROWS_AS(evolve(psi, st, {0.0}, 0, 10.5 * dt, n), std::invalid_argument);
  }
}

TEST_CASE("boundary leakage aborts") {
  const auto g = build_grid(-5, 5, 256, 1);
  const SplitStepper st(g, free_hamiltonian(1), {0.01, true});
  NoiseStream n(1, 0, 0.01);
  const auto psi = gaussian_packet(g, 0, 8, 0.4);
  CHECK_THROWS_AS(evolve(psi, st, {0.0}, 0, 1.0, n), NumericalError);
}

TEST_CASE("measurement localizes: time-averaged var_x falls with k") {
  // Reduced-scale version of the k = 10 vs k = 0.01 ordering: strong
  // heating at hbar = 16 limits the k = 10 run to a few periods.
  const auto p = duffing(16);
  const auto ham = duffing_hamiltonian(p);
  const auto g = build_grid(-15, 15, 512, 16);
  const double dt = p.period() / 2000;
  const SplitStepper st(g, ham, {dt, true});
  auto avg_var = [&](double k) {
    NoiseStream n(21, 0, dt);
    double s = 0;
    int c = 0;
    evolve(well_packet(g), st, {k}, 0, 2000 * dt, n, [&](const StepInfo& i, const Wavefunction& w) {
      if (i.step % 20 == 0) {
        s += expectations(w, ham, w.time).var_x;
        ++c;
      }
    });
    return s / c;
  };
  CHECK(avg_var(10) < avg_var(0.01));
}

TEST_CASE("backaction: free-particle <p^2> grows at 2 hbar^2 k") {
  const double hbar = 1, k = 1, dt = 1e-3;
  const int steps = 100, samples = 1000;
  const auto g = build_grid(-10, 10, 256, hbar);
  const auto ham = free_hamiltonian(1);
  const SplitStepper st(g, ham, {dt, true});
  const auto psi0 = gaussian_packet(g, 0, 0, 1);
  const auto e0 = expectations(psi0, ham, 0);
  const double p2_0 = e0.var_p + e0.mean_p * e0.mean_p;
  double acc = 0;
  for (int s = 0; s < samples; ++s) {
    NoiseStream n(77, static_cast<std::uint64_t>(s), dt);
    const auto psi = evolve(psi0, st, {k}, 0, steps * dt, n);
    const auto e = expectations(psi, ham, psi.time);
    acc += e.var_p + e.mean_p * e.mean_p;
  }
  const double rate = (acc / samples - p2_0) / (steps * dt);
  CHECK(rate == Approx(2 * hbar * hbar * k).epsilon(0.1));
}
