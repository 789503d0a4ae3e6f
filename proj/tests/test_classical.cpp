#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qlyap/classical.hpp"

using namespace qlyap;
using doctest::Approx;

namespace {

Hamiltonian undriven() {
  DuffingParams p;
  p.Lambda = 0;
  return duffing_hamiltonian(p);
}

const double kT = DuffingParams{}.period();

}  // namespace

TEST_CASE("equilibrium at the well minimum") {
  const auto h = undriven();
  ClassicalState s{std::sqrt(10.0), 0, 0};
  for (int i = 0; i < 1000; ++i) s = classical_step(s, h, kT / 2000);
  CHECK(std::abs(s.x - std::sqrt(10.0)) < 1e-12);
  CHECK(std::abs(s.p) < 1e-10);
  CHECK(s.t == Approx(1000 * kT / 2000));
}

TEST_CASE("undriven energy is conserved by RK4") {
  const auto h = undriven();
  ClassicalState s{1.0, 5.0, 0};
  const double e0 = classical_energy(s, h);
  for (int i = 0; i < 10000; ++i) s = classical_step(s, h, kT / 2000);
  CHECK(std::abs((classical_energy(s, h) - e0) / e0) < 1e-8);
}

TEST_CASE("driven step uses the time-dependent force") {
  DuffingParams p;
  const auto h = duffing_hamiltonian(p);
  // At the minimum only the drive acts: p(dt) = -Lambda * integral cos(w t) + O(dt^3).
  const double dt = 1e-4;
  const auto s = classical_step({std::sqrt(10.0), 0, 0}, h, dt);
  CHECK(s.p == Approx(-p.Lambda * std::sin(p.omega * dt) / p.omega).epsilon(1e-6));
}

TEST_CASE("momentum kicks diffuse at 2 D_p") {
  // Near the minimum the motion is harmonic with w = sqrt(40), so
  // Var p(t) = D_p (t + sin(2 w t) / (2 w)).
  const auto h = undriven();
  const double D = 1e-4, dt = kT / 2000;
  const int steps = 200, n = 4000;
  std::vector<double> ps;
  for (int id = 0; id < n; ++id) {
    NoiseStream noise(31, static_cast<std::uint64_t>(id), dt);
    ClassicalState s{std::sqrt(10.0), 0, 0};
    for (int i = 0; i < steps; ++i) s = classical_step(s, h, dt, D, &noise);
    ps.push_back(s.p);
  }
  double m = 0, v = 0;
  for (double p : ps) m += p;
  m /= n;
  for (double p : ps) v += (p - m) * (p - m);
  v /= n - 1;
  const double t = steps * dt, w = std::sqrt(40.0);
  CHECK(v == Approx(D * (t + std::sin(2 * w * t) / (2 * w))).epsilon(0.06));
}

TEST_CASE("noisy steps are reproducible and consume one draw each") {
  const auto h = duffing_hamiltonian({});
  NoiseStream a(5, 2, 0.001), b(5, 2, 0.001);
  ClassicalState sa{1, 0, 0}, sb{1, 0, 0};
  for (int i = 0; i < 100; ++i) {
    sa = classical_step(sa, h, 0.001, 0.01, &a);
    sb = classical_step(sb, h, 0.001, 0.01, &b);
  }
  CHECK(sa.x == sb.x);
  CHECK(sa.p == sb.p);
  CHECK(a.counter() == 100);
}

TEST_CASE("tangent_step") {
  const auto h = undriven();
  const double dt = 1e-6;
  SUBCASE("at the barrier top the tangent grows with dp' = +2A dx") {
    const auto v = tangent_step({0, 0, 0}, {1, 0}, h, dt);
    CHECK(v.dp / dt == Approx(20).epsilon(1e-5));
  }
  SUBCASE("at the minimum the tangent oscillates with dp' = -4A dx") {
    const auto v = tangent_step({std::sqrt(10.0), 0, 0}, {1, 0}, h, dt);
    CHECK(v.dp / dt == Approx(-40).epsilon(1e-5));
  }
  SUBCASE("zero in, zero out") {
    const auto v = tangent_step({1.3, 2.0, 0.4}, {0, 0}, duffing_hamiltonian({}), 0.01);
    CHECK(v.dx == 0.0);
    CHECK(v.dp == 0.0);
  }
  SUBCASE("exactly linear") {
    const ClassicalState s{1.3, 2.0, 0.4};
    const auto h2 = duffing_hamiltonian({});
    const auto a = tangent_step(s, {1, 0}, h2, 0.01);
    const auto b = tangent_step(s, {0, 1}, h2, 0.01);
    const auto c = tangent_step(s, {2.5, -0.75}, h2, 0.01);
    CHECK(c.dx == Approx(2.5 * a.dx - 0.75 * b.dx).epsilon(1e-14));
    CHECK(c.dp == Approx(2.5 * a.dp - 0.75 * b.dp).epsilon(1e-14));
  }
  SUBCASE("matches a centred finite difference of classical_step") {
    const ClassicalState s{1.3, 2.0, 0.4};
    const auto h2 = duffing_hamiltonian({});
    const double dt2 = kT / 2000, eps = 1e-5;
    const TangentVector v{0.6, -0.8};
    const auto t = tangent_step(s, v, h2, dt2);
    const auto plus = classical_step({s.x + eps * v.dx, s.p + eps * v.dp, s.t}, h2, dt2);
    const auto minus = classical_step({s.x - eps * v.dx, s.p - eps * v.dp, s.t}, h2, dt2);
    CHECK(t.dx == Approx((plus.x - minus.x) / (2 * eps)).epsilon(1e-8));
    CHECK(t.dp == Approx((plus.p - minus.p) / (2 * eps)).epsilon(1e-8));
  }
  SUBCASE("joint_step agrees with the separate steps") {
    const ClassicalState s{1.3, 2.0, 0.4};
    const auto h2 = duffing_hamiltonian({});
    const auto [b, v] = joint_step(s, {0.6, -0.8}, h2, 0.01);
    const auto b2 = classical_step(s, h2, 0.01);
    const auto v2 = tangent_step(s, {0.6, -0.8}, h2, 0.01);
    CHECK(b.x == b2.x);
    CHECK(v.dp == v2.dp);
  }
}

TEST_CASE("Benettin on an inverted oscillator returns sqrt(2A)") {
  Hamiltonian h;
  h.quadratic = -1.0;  // V = -x^2, V'' = -2
  BenettinConfig c{0.001, 200, 1.0, 0, {}};
  const auto e = benettin_lyapunov({0, 0, 0}, h, c);
  CHECK(e.lambda_t.back() == Approx(std::sqrt(2.0)).epsilon(0.01));
  CHECK(e.times.size() == 200);
  CHECK(e.times.back() == Approx(200));
}

TEST_CASE("regular motion in one well has a vanishing exponent") {
  BenettinConfig c{kT / 2000, 1000 * kT, kT, 0, {}};
  const auto e = benettin_lyapunov({3.5, 0, 0}, undriven(), c);
  CHECK(e.lambda_t.back() < 0.02);
}

TEST_CASE("tangent and finite-difference estimates agree in the chaotic sea") {
  const auto h = duffing_hamiltonian({});
  BenettinConfig c{kT / 2000, 300 * kT, kT / 4, 20 * kT, {}};
  const ClassicalState s0{std::sqrt(10.0), 0, 0};
  const auto tan = benettin_lyapunov(s0, h, c);
  const auto fd = finite_difference_lyapunov(s0, h, c);
  CHECK(tan.lambda_t.back() > 0.3);
  CHECK(fd.lambda_t.back() == Approx(tan.lambda_t.back()).epsilon(0.02));
}

TEST_CASE("classical_strobe") {
  const auto h = duffing_hamiltonian({});
  CHECK(classical_strobe({1, 0, 0}, h, kT / 2000, 0).empty());

  SUBCASE("undriven orbit stays on its energy shell") {
    const auto u = undriven();
    const ClassicalState s0{3.5, 0, 0};
    const auto pts = classical_strobe(s0, u, kT / 2000, 200);
    REQUIRE(pts.size() == 200);
    const double e0 = classical_energy(s0, u);
    for (const auto& [x, p] : pts) CHECK(classical_energy({x, p, 0}, u) == Approx(e0).epsilon(1e-7));
  }
  SUBCASE("driven orbit fills a bounded region") {
    const auto pts = classical_strobe({std::sqrt(10.0), 0, 0}, h, kT / 2000, 10000);
    REQUIRE(pts.size() == 10000);
    double xm = 0, pm = 0;
    for (const auto& [x, p] : pts) {
      xm = std::max(xm, std::abs(x));
      pm = std::max(pm, std::abs(p));
    }
    CHECK(xm < 10);
    CHECK(pm < 40);
    CHECK(xm > 3);  // visits both wells
  }
}
