#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "qlyap/aligned.hpp"

namespace qlyap {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex, AlignedAllocator<Complex>>;

// Uniform periodic position grid. Points sit at x_min + j*dx, j = 0..n-1;
// x_max itself is the periodic image of x_min. The momentum grid is the DFT
// dual, so dx * dp * n = 2*pi*hbar.
struct GridSpec {
  double x_min = -15.0;
  double x_max = 15.0;
  std::size_t n_points = 512;
  double hbar = 1.0;

  double dx() const { return (x_max - x_min) / static_cast<double>(n_points); }
  double dp() const;
  double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }
  // Momentum of DFT bin j in FFT ordering (0, dp, ..., -dp).
  double p(std::size_t j) const;

  std::vector<double> positions() const;
  std::vector<double> momenta() const;

  bool operator==(const GridSpec&) const = default;
};

GridSpec build_grid(double x_min, double x_max, std::size_t n_points, double hbar);

// Constants of the driven Duffing oscillator
//   H = p^2/2m + B x^4 - A x^2 + Lambda x cos(omega t).
struct DuffingParams {
  double mass = 1.0;
  double A = 10.0;
  double B = 0.5;
  double Lambda = 10.0;
  double omega = 6.07;
  double hbar = 1.0e-2;

  double period() const;
  void validate() const;

  bool operator==(const DuffingParams&) const = default;
};

// Polynomial Hamiltonian H = p^2/2m + quartic x^4 + quadratic x^2
// + drive_amplitude x cos(drive_frequency t). Covers the Duffing oscillator
// and the quadratic test systems (harmonic, free, frozen) used to check the
// integrators against closed-form solutions.
struct Hamiltonian {
  double mass = 1.0;
  double quartic = 0.0;
  double quadratic = 0.0;
  double drive_amplitude = 0.0;
  double drive_frequency = 0.0;
  bool kinetic = true;  // false freezes the dynamics (H = 0 when the rest is zero too)

  double static_potential(double x) const { return (quartic * x * x + quadratic) * x * x; }
  double drive(double t) const;
  double potential(double x, double t) const { return static_potential(x) + x * drive(t); }
  // -dV/dx
  double force(double x, double t) const;
  // d^2V/dx^2, the tangent-space stiffness.
  double curvature(double x) const { return 12.0 * quartic * x * x + 2.0 * quadratic; }

  bool operator==(const Hamiltonian&) const = default;
};

Hamiltonian duffing_hamiltonian(const DuffingParams& params);
Hamiltonian harmonic_hamiltonian(double mass, double omega0);
Hamiltonian free_hamiltonian(double mass);
Hamiltonian frozen_hamiltonian();

struct WellMinima {
  double left;
  double right;
  double v_min;
};

// Stationary points +-sqrt(A/2B) of B x^4 - A x^2; throws for a single well.
WellMinima potential_minima(const DuffingParams& params);

struct Wavefunction {
  GridSpec grid;
  ComplexVector amplitudes;
  double time = 0.0;
};

struct Expectations {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;
  double norm = 0.0;
  double energy = 0.0;
};

// sum |psi_j|^2 dx
double norm(const Wavefunction& psi);
void normalize(Wavefunction& psi);
double mean_x(const Wavefunction& psi);
// Spectral <p>.
double mean_p(const Wavefunction& psi);
// |<a|b>| with the grid measure.
double fidelity(const Wavefunction& a, const Wavefunction& b);
// Largest |psi|^2 over the two outermost points on each side.
double boundary_density(const Wavefunction& psi);

// Normalized Gaussian with <x> = x0, <p> = p0, Var(x) = sigma_x^2. Throws if
// the density at either end of the grid exceeds 1e-12.
Wavefunction gaussian_packet(const GridSpec& grid, double x0, double p0, double sigma_x);

// Momentum moments are weighted in momentum space (exact on the grid).
Expectations expectations(const Wavefunction& psi, const Hamiltonian& ham, double t);

// Weyl displacement: translate by dx0 (spectral shift) then boost by dp0.
// Throws if the result leaks onto the grid boundary.
Wavefunction displace(const Wavefunction& psi, double dx0, double dp0);

// Momentum-space amplitudes phi_j (FFT ordering) scaled so sum |phi_j|^2 dp = 1.
ComplexVector momentum_amplitudes(const Wavefunction& psi);

}  // namespace qlyap
