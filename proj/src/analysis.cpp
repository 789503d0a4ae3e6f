#include "qlyap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qlyap {

StrobeCollector::StrobeCollector(double period, double dt, double warmup, std::size_t n_periods, double phase)
    : period_(period), dt_(dt), phase_(phase), n_periods_(n_periods) {
  if (!(period > 0.0) || !(dt > 0.0)) throw std::invalid_argument("StrobeCollector: period and dt must be positive");
  if (!(warmup >= 0.0)) throw std::invalid_argument("StrobeCollector: warmup must be non-negative");
  if (phase < 0.0 || phase >= period) throw std::invalid_argument("StrobeCollector: phase must lie in [0, T)");
  // First period boundary at or after the warmup (n = 0 is the initial state, never sampled).
  const double first = std::ceil((warmup - phase) / period - 1e-9);
  next_index_ = static_cast<std::size_t>(std::max(1.0, first));
  excluded_ = next_index_ - 1;
  points_.reserve(n_periods);
}

void StrobeCollector::observe(const StepInfo& info, const Wavefunction& psi) {
  if (complete()) return;
  const double target = static_cast<double>(next_index_) * period_ + phase_;
  if (info.t >= target - 0.5 * dt_) {
    points_.emplace_back(mean_x(psi), mean_p(psi));
    sample_times_.push_back(info.t);
    ++next_index_;
  }
}

StepObserver StrobeCollector::observer() {
  return [this](const StepInfo& info, const Wavefunction& psi) { observe(info, psi); };
}

StrobeSet StrobeCollector::result(double k, double hbar) const {
  if (!complete())
    throw std::runtime_error("stroboscopic_collect: trajectory shorter than warmup + n_periods T (" +
                             std::to_string(points_.size()) + " of " + std::to_string(n_periods_) + " samples)");
  return StrobeSet{points_, k, hbar, excluded_, phase_};
}

StrobeSet stroboscopic_collect(const Wavefunction& psi0, const SplitStepper& stepper, const MeasurementConfig& meas,
                               NoiseStream noise, double warmup, std::size_t n_periods, double phase) {
  const double freq = stepper.hamiltonian().drive_frequency;
  if (!(freq > 0.0)) throw std::invalid_argument("stroboscopic_collect: Hamiltonian has no drive period");
  const double period = 2.0 * std::numbers::pi / freq;
  const double dt = stepper.dt();
  StrobeCollector collector(period, dt, warmup, n_periods, phase);
  if (n_periods == 0) return collector.result(meas.k, stepper.grid().hbar);
  const double first = std::max(1.0, std::ceil((warmup - phase) / period - 1e-9));
  const double t_end = (first + static_cast<double>(n_periods) - 1.0) * period + phase;
  const auto n_steps = static_cast<std::uint64_t>(std::ceil(t_end / dt - 0.5));
  evolve(psi0, stepper, meas, psi0.time, psi0.time + static_cast<double>(n_steps) * dt, noise, collector.observer());
  return collector.result(meas.k, stepper.grid().hbar);
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t n_bins) {
  if (!(hi > lo) || n_bins == 0) throw std::invalid_argument("uniform_edges: need hi > lo and n_bins > 0");
  std::vector<double> e(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  return e;
}

namespace {

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("histogram: need at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("histogram: bin edges must increase");
}

// Index of the bin containing x, or -1 outside.
long bin_of(std::span<const double> edges, double x) {
  if (x < edges.front() || x >= edges.back()) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), x);
  return static_cast<long>(it - edges.begin()) - 1;
}

std::vector<double> snapshot_mass(const Wavefunction& psi, std::span<const double> edges) {
  std::vector<double> mass(edges.size() - 1, 0.0);
  const double dx = psi.grid.dx();
  double outside = 0.0;
  for (std::size_t j = 0; j < psi.grid.n_points; ++j) {
    const double w = std::norm(psi.amplitudes[j]) * dx;
    const long b = bin_of(edges, psi.grid.x(j));
    if (b < 0)
      outside += w;
    else
      mass[static_cast<std::size_t>(b)] += w;
  }
  if (outside > 1e-9)
    throw std::invalid_argument("position_histogram: bins do not cover the support (" + std::to_string(outside) +
                                " of the probability outside)");
  return mass;
}

Histogram from_mass(std::span<const double> edges, const std::vector<double>& mass, std::string tag) {
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) throw std::invalid_argument("histogram: no weight inside the bins");
  Histogram h{{edges.begin(), edges.end()}, std::vector<double>(mass.size()), std::move(tag)};
  for (std::size_t i = 0; i < mass.size(); ++i) h.density[i] = mass[i] / total / (edges[i + 1] - edges[i]);
  return h;
}

}  // namespace

double Histogram::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double w = density[i] * (bin_edges[i + 1] - bin_edges[i]);
    s += w * 0.5 * (bin_edges[i] + bin_edges[i + 1]);
  }
  return s;
}

double Histogram::variance() const {
  const double m = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double w = density[i] * (bin_edges[i + 1] - bin_edges[i]);
    const double c = 0.5 * (bin_edges[i] + bin_edges[i + 1]) - m;
    s += w * c * c;
  }
  return s;
}

double Histogram::quantile(double q) const {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("Histogram::quantile: q outside [0, 1]");
  double cdf = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double width = bin_edges[i + 1] - bin_edges[i];
    const double w = density[i] * width;
    if (cdf + w >= q && w > 0.0) return bin_edges[i] + width * (q - cdf) / w;
    cdf += w;
  }
  return bin_edges.back();
}

Histogram position_histogram(const Wavefunction& psi, std::span<const double> bin_edges) {
  check_edges(bin_edges);
  return from_mass(bin_edges, snapshot_mass(psi, bin_edges), "snapshot");
}

Histogram position_histogram(std::span<const double> samples, std::span<const double> bin_edges) {
  check_edges(bin_edges);
  std::vector<double> counts(bin_edges.size() - 1, 0.0);
  std::size_t outside = 0;
  for (double x : samples) {
    const long b = bin_of(bin_edges, x);
    if (b < 0)
      ++outside;
    else
      counts[static_cast<std::size_t>(b)] += 1.0;
  }
  if (outside > 0)
    throw std::invalid_argument("position_histogram: " + std::to_string(outside) + " samples outside the bins");
  return from_mass(bin_edges, counts, "samples");
}

HistogramAccumulator::HistogramAccumulator(std::vector<double> bin_edges) : edges_(std::move(bin_edges)) {
  check_edges(edges_);
  sum_.assign(edges_.size() - 1, 0.0);
}

void HistogramAccumulator::add(const Wavefunction& psi) {
  const auto mass = snapshot_mass(psi, edges_);
  for (std::size_t i = 0; i < mass.size(); ++i) sum_[i] += mass[i];
  ++count_;
}

Histogram HistogramAccumulator::result() const {
  if (count_ == 0) throw std::runtime_error("HistogramAccumulator: no snapshots added");
  return from_mass(edges_, sum_, "window-average");
}

BoundingBox bounding_box(std::span<const PhasePoint> points) {
  if (points.empty()) throw std::invalid_argument("bounding_box: empty input");
  BoundingBox b{points[0].first, points[0].first, points[0].second, points[0].second};
  for (const auto& [x, p] : points) {
    b.x_min = std::min(b.x_min, x);
    b.x_max = std::max(b.x_max, x);
    b.p_min = std::min(b.p_min, p);
    b.p_max = std::max(b.p_max, p);
  }
  return b;
}

namespace {

std::vector<double> axis_edges(double lo, double hi, std::size_t n) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return uniform_edges(lo, hi, n);
}

// Bin index with the upper edge folded into the last bin.
std::size_t clamp_bin(const std::vector<double>& edges, double v) {
  const std::size_t n = edges.size() - 1;
  const double f = (v - edges.front()) / (edges.back() - edges.front()) * static_cast<double>(n);
  const auto i = static_cast<long>(std::floor(f));
  return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(n) - 1));
}

std::vector<double> bin_counts(std::span<const PhasePoint> points, const std::vector<double>& xe,
                               const std::vector<double>& pe) {
  const std::size_t np = pe.size() - 1;
  std::vector<double> counts((xe.size() - 1) * np, 0.0);
  for (const auto& [x, p] : points) counts[clamp_bin(xe, x) * np + clamp_bin(pe, p)] += 1.0;
  return counts;
}

}  // namespace

Density2D density2d(std::span<const PhasePoint> points, std::size_t nx_bins, std::size_t np_bins,
                    const std::vector<double>& levels) {
  if (points.empty()) throw std::invalid_argument("density2d: empty input");
  if (nx_bins == 0 || np_bins == 0) throw std::invalid_argument("density2d: need at least one bin per axis");
  const auto box = bounding_box(points);
  Density2D d;
  d.x_edges = axis_edges(box.x_min, box.x_max, nx_bins);
  d.p_edges = axis_edges(box.p_min, box.p_max, np_bins);
  d.density = bin_counts(points, d.x_edges, d.p_edges);
  const double peak = *std::max_element(d.density.begin(), d.density.end());
  for (auto& v : d.density) v /= peak;
  d.levels = levels;
  for (double level : levels) {
    std::vector<std::uint8_t> mask(d.density.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = d.density[i] >= level ? 1 : 0;
    d.level_masks.push_back(std::move(mask));
  }
  return d;
}

double region_overlap(std::span<const PhasePoint> a, std::span<const PhasePoint> b, std::size_t nx_bins,
                      std::size_t np_bins) {
  const auto ba = bounding_box(a);
  const auto bb = bounding_box(b);
  const auto xe = axis_edges(std::min(ba.x_min, bb.x_min), std::max(ba.x_max, bb.x_max), nx_bins);
  const auto pe = axis_edges(std::min(ba.p_min, bb.p_min), std::max(ba.p_max, bb.p_max), np_bins);
  const auto ca = bin_counts(a, xe, pe);
  const auto cb = bin_counts(b, xe, pe);
  double s = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i)
    s += std::min(ca[i] / static_cast<double>(a.size()), cb[i] / static_cast<double>(b.size()));
  return s;
}

}  // namespace qlyap
