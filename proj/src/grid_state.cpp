#include "qlyap/grid_state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qlyap/errors.hpp"
#include "qlyap/fft.hpp"

namespace qlyap {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBoundaryTolerance = 1e-10;
}  // namespace

double GridSpec::dp() const { return kTwoPi * hbar / (static_cast<double>(n_points) * dx()); }

double GridSpec::p(std::size_t j) const {
  const auto n = static_cast<long long>(n_points);
  const auto jj = static_cast<long long>(j);
  const long long k = jj < n / 2 ? jj : jj - n;
  return static_cast<double>(k) * dp();
}

std::vector<double> GridSpec::positions() const {
  std::vector<double> xs(n_points);
  for (std::size_t j = 0; j < n_points; ++j) xs[j] = x(j);
  return xs;
}

std::vector<double> GridSpec::momenta() const {
  std::vector<double> ps(n_points);
  for (std::size_t j = 0; j < n_points; ++j) ps[j] = p(j);
  return ps;
}

GridSpec build_grid(double x_min, double x_max, std::size_t n_points, double hbar) {
  if (!(x_max > x_min)) throw std::invalid_argument("build_grid: degenerate interval, need x_max > x_min");
  if (n_points < 16 || !std::has_single_bit(n_points))
    throw std::invalid_argument("build_grid: n_points must be a power of two >= 16, got " +
                                std::to_string(n_points));
  if (!(hbar > 0.0)) throw std::invalid_argument("build_grid: hbar must be positive");
  return GridSpec{x_min, x_max, n_points, hbar};
}

double DuffingParams::period() const { return kTwoPi / omega; }

void DuffingParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("DuffingParams: mass must be positive");
  if (!(B > 0.0)) throw std::invalid_argument("DuffingParams: B must be positive");
  if (!(omega > 0.0)) throw std::invalid_argument("DuffingParams: omega must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("DuffingParams: hbar must be positive");
}

double Hamiltonian::drive(double t) const {
  return drive_amplitude == 0.0 ? 0.0 : drive_amplitude * std::cos(drive_frequency * t);
}

double Hamiltonian::force(double x, double t) const {
  return -(4.0 * quartic * x * x + 2.0 * quadratic) * x - drive(t);
}

Hamiltonian duffing_hamiltonian(const DuffingParams& params) {
  params.validate();
  return Hamiltonian{params.mass, params.B, -params.A, params.Lambda, params.omega, true};
}

Hamiltonian harmonic_hamiltonian(double mass, double omega0) {
  return Hamiltonian{mass, 0.0, 0.5 * mass * omega0 * omega0, 0.0, 0.0, true};
}

Hamiltonian free_hamiltonian(double mass) { return Hamiltonian{mass, 0.0, 0.0, 0.0, 0.0, true}; }

Hamiltonian frozen_hamiltonian() { return Hamiltonian{1.0, 0.0, 0.0, 0.0, 0.0, false}; }

WellMinima potential_minima(const DuffingParams& params) {
  if (!(params.A > 0.0) || !(params.B > 0.0))
    throw std::invalid_argument("potential_minima: A <= 0 gives a single well");
  const double x = std::sqrt(params.A / (2.0 * params.B));
  return WellMinima{-x, x, -params.A * params.A / (4.0 * params.B)};
}

double norm(const Wavefunction& psi) {
  double s = 0.0;
  for (const auto& a : psi.amplitudes) s += std::norm(a);
  return s * psi.grid.dx();
}

void normalize(Wavefunction& psi) {
  const double n = norm(psi);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("normalize: state has zero or non-finite norm");
  const double scale = 1.0 / std::sqrt(n);
  for (auto& a : psi.amplitudes) a *= scale;
}

double mean_x(const Wavefunction& psi) {
  const auto& g = psi.grid;
  const double dx = g.dx();
  double s = 0.0;
  double w = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double rho = std::norm(psi.amplitudes[j]);
    s += (g.x_min + static_cast<double>(j) * dx) * rho;
    w += rho;
  }
  return s / w;
}

double mean_p(const Wavefunction& psi) {
  ComplexVector phi = psi.amplitudes;
  fft::forward(phi);
  double s = 0.0;
  double w = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    const double rho = std::norm(phi[j]);
    s += psi.grid.p(j) * rho;
    w += rho;
  }
  return s / w;
}

double fidelity(const Wavefunction& a, const Wavefunction& b) {
  if (a.amplitudes.size() != b.amplitudes.size()) throw std::invalid_argument("fidelity: grid mismatch");
  Complex s{0.0, 0.0};
  for (std::size_t j = 0; j < a.amplitudes.size(); ++j) s += std::conj(a.amplitudes[j]) * b.amplitudes[j];
  return std::abs(s) * a.grid.dx();
}

double boundary_density(const Wavefunction& psi) {
  const auto& amp = psi.amplitudes;
  const std::size_t n = amp.size();
  return std::max({std::norm(amp[0]), std::norm(amp[1]), std::norm(amp[n - 2]), std::norm(amp[n - 1])});
}

ComplexVector momentum_amplitudes(const Wavefunction& psi) {
  ComplexVector phi = psi.amplitudes;
  fft::forward(phi);
  const double scale = psi.grid.dx() / std::sqrt(kTwoPi * psi.grid.hbar);
  for (auto& z : phi) z *= scale;
  return phi;
}

Wavefunction gaussian_packet(const GridSpec& grid, double x0, double p0, double sigma_x) {
  if (!(sigma_x > 0.0)) throw std::invalid_argument("gaussian_packet: sigma_x must be positive");
  Wavefunction psi{grid, ComplexVector(grid.n_points), 0.0};
  const double amp0 = std::pow(kTwoPi * sigma_x * sigma_x, -0.25);
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    const double y = grid.x(j) - x0;
    const double mag = amp0 * std::exp(-y * y / (4.0 * sigma_x * sigma_x));
    psi.amplitudes[j] = std::polar(mag, p0 * grid.x(j) / grid.hbar);
  }
  // The far edge x_max is the periodic image of x_min, check the density there too.
  const double y_edge = grid.x_max - x0;
  const double edge_density =
      std::max(boundary_density(psi), amp0 * amp0 * std::exp(-y_edge * y_edge / (2.0 * sigma_x * sigma_x)));
  if (edge_density > 1e-12)
    throw std::invalid_argument("gaussian_packet: packet truncated by the grid boundary (edge density " +
                                std::to_string(edge_density) + ")");
  normalize(psi);
  return psi;
}

Expectations expectations(const Wavefunction& psi, const Hamiltonian& ham, double t) {
  const auto& g = psi.grid;
  const double dx = g.dx();
  Expectations e;
  double sx = 0.0, sxx = 0.0, sv = 0.0, w = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double x = g.x(j);
    const double rho = std::norm(psi.amplitudes[j]);
    w += rho;
    sx += x * rho;
    sxx += x * x * rho;
    sv += ham.potential(x, t) * rho;
  }
  e.norm = w * dx;
  e.mean_x = sx / w;
  e.var_x = std::max(0.0, sxx / w - e.mean_x * e.mean_x);

  const auto phi = momentum_amplitudes(psi);
  double sp = 0.0, spp = 0.0, wp = 0.0;
  for (std::size_t j = 0; j < g.n_points; ++j) {
    const double p = g.p(j);
    const double rho = std::norm(phi[j]);
    wp += rho;
    sp += p * rho;
    spp += p * p * rho;
  }
  e.mean_p = sp / wp;
  e.var_p = std::max(0.0, spp / wp - e.mean_p * e.mean_p);
  const double kinetic = ham.kinetic ? spp / wp / (2.0 * ham.mass) : 0.0;
  e.energy = kinetic + sv / w;
  return e;
}

Wavefunction displace(const Wavefunction& psi, double dx0, double dp0) {
  Wavefunction out = psi;
  const auto& g = psi.grid;
  if (dx0 != 0.0) {
    fft::forward(out.amplitudes);
    for (std::size_t j = 0; j < g.n_points; ++j) out.amplitudes[j] *= std::polar(1.0, -g.p(j) * dx0 / g.hbar);
    fft::inverse(out.amplitudes);
  }
  if (dp0 != 0.0) {
    for (std::size_t j = 0; j < g.n_points; ++j) out.amplitudes[j] *= std::polar(1.0, dp0 * g.x(j) / g.hbar);
  }
  if (boundary_density(out) > kBoundaryTolerance)
    throw NumericalError("displace: displaced state leaks onto the grid boundary");
  return out;
}

}  // namespace qlyap
