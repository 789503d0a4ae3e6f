#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qlyap/grid_state.hpp"
#include "qlyap/propagator.hpp"

namespace qlyap {

using PhasePoint = std::pair<double, double>;  // (<x>, <p>) or classical (x, p)

struct StrobeSet {
  std::vector<PhasePoint> points;
  double k = 0.0;
  double hbar = 0.0;
  std::size_t n_warmup_excluded = 0;  // drive periods skipped as transient
  double phase = 0.0;                 // sampling time modulo T
};

// Step observer that records (<x>, <p>) at t = n T + phase once t >= warmup.
// A sample is taken at the first step whose end time is within dt/2 of the
// target, so the sampling error is below dt.
class StrobeCollector {
 public:
  StrobeCollector(double period, double dt, double warmup, std::size_t n_periods, double phase = 0.0);

  void observe(const StepInfo& info, const Wavefunction& psi);
  StepObserver observer();
  bool complete() const { return points_.size() == n_periods_; }
  // Throws std::runtime_error if the trajectory ended before n_periods samples.
  StrobeSet result(double k, double hbar) const;
  const std::vector<double>& sample_times() const { return sample_times_; }

 private:
  double period_;
  double dt_;
  double phase_;
  std::size_t n_periods_;
  std::size_t next_index_;
  std::size_t excluded_;
  std::vector<PhasePoint> points_;
  std::vector<double> sample_times_;
};

// Evolves psi0 for warmup + n_periods T (plus the phase offset) and collects
// the stroboscopic samples.
StrobeSet stroboscopic_collect(const Wavefunction& psi0, const SplitStepper& stepper, const MeasurementConfig& meas,
                               NoiseStream noise, double warmup, std::size_t n_periods, double phase = 0.0);

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<double> density;  // normalized: sum density * width = 1
  std::string observable_tag;    // "snapshot", "window-average" or "samples"

  double mean() const;
  double variance() const;
  // Linear interpolation inside the bin where the CDF crosses q.
  double quantile(double q) const;
};

std::vector<double> uniform_edges(double lo, double hi, std::size_t n_bins);

// |psi(x)|^2 binned by grid point. Throws if more than 1e-9 of the
// probability falls outside the bins.
Histogram position_histogram(const Wavefunction& psi, std::span<const double> bin_edges);
// Histogram of scalar samples (e.g. <x> values).
Histogram position_histogram(std::span<const double> samples, std::span<const double> bin_edges);

// Running average of snapshot histograms over a time window.
class HistogramAccumulator {
 public:
  explicit HistogramAccumulator(std::vector<double> bin_edges);
  void add(const Wavefunction& psi);
  std::size_t count() const { return count_; }
  Histogram result() const;

 private:
  std::vector<double> edges_;
  std::vector<double> sum_;
  std::size_t count_ = 0;
};

inline const std::vector<double> kDefaultDensityLevels{0.05, 0.15, 0.25, 0.35, 0.45, 0.55};

struct Density2D {
  std::vector<double> x_edges;
  std::vector<double> p_edges;
  std::vector<double> density;  // relative to the fullest bin; index ix * np + ip
  std::vector<double> levels;
  std::vector<std::vector<std::uint8_t>> level_masks;  // mask[l][bin] = density >= levels[l]

  std::size_t nx() const { return x_edges.size() - 1; }
  std::size_t np() const { return p_edges.size() - 1; }
  double at(std::size_t ix, std::size_t ip) const { return density[ix * np() + ip]; }
};

// Bins span the bounding box of the points (widened by 1/2 on a degenerate axis).
Density2D density2d(std::span<const PhasePoint> points, std::size_t nx_bins, std::size_t np_bins,
                    const std::vector<double>& levels = kDefaultDensityLevels);

// Histogram intersection sum_b min(P_a(b), P_b(b)) of the two normalized
// point distributions on a common grid over the union bounding box.
double region_overlap(std::span<const PhasePoint> a, std::span<const PhasePoint> b, std::size_t nx_bins,
                      std::size_t np_bins);

struct BoundingBox {
  double x_min, x_max, p_min, p_max;
  double area() const { return (x_max - x_min) * (p_max - p_min); }
};
BoundingBox bounding_box(std::span<const PhasePoint> points);

}  // namespace qlyap
