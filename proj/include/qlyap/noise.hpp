#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace qlyap {

// Philox4x32-10 block: counter (4 x u32) under key (2 x u32). Stateless, so
// any step of any substream is reachable in O(1).
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  static Block generate(Block counter, std::array<std::uint32_t, 2> key);
};

// Name of the variate algorithm; written into output metadata because the
// bitwise reproducibility claim depends on it.
inline constexpr const char* kGaussianAlgorithm = "philox4x32-10/box-muller-cos";

// Wiener increments for noise realization `trajectory_id` under `master_seed`.
// The increment for step n depends only on (master_seed, trajectory_id, n).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t trajectory_id, double dt);

  // Gaussian(0, dt) for the current counter; advances the counter.
  double next();
  // Increment for an arbitrary step without touching the counter.
  double at(std::uint64_t step) const;
  // Standard normal variate for an arbitrary step.
  double standard_normal(std::uint64_t step) const;

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t trajectory_id() const { return trajectory_id_; }
  double dt() const { return dt_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t step) { counter_ = step; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t trajectory_id_;
  double dt_;
  double sqrt_dt_;
  std::uint64_t counter_ = 0;
};

inline double wiener_increment(NoiseStream& stream) { return stream.next(); }

// The detector output dy = <x> dt + dW / sqrt(8k), one entry per step.
struct MeasurementRecord {
  double k = 0.0;
  double dt = 0.0;
  std::vector<double> dy;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::uint64_t> trajectory_id;

  std::size_t n_steps() const { return dy.size(); }
};

void record_append(MeasurementRecord& record, double mean_x, double dt, double k, double dW);

// Inverse of record_append: dW = sqrt(8k) (dy_step - mean_x dt).
double increment_from_record(const MeasurementRecord& record, std::size_t step, double mean_x_current);

// Little-endian binary: "QLYP", u32 version, f64 k, f64 dt, u64 n_steps,
// u64 master_seed, u64 trajectory_id, then n_steps f64 dy values.
// Unknown provenance fields are written as UINT64_MAX.
inline constexpr std::uint32_t kRecordFormatVersion = 1;
void write_record(const std::filesystem::path& path, const MeasurementRecord& record);
MeasurementRecord read_record(const std::filesystem::path& path);
// CSV columns: step, t, dy.
void write_record_csv(const std::filesystem::path& path, const MeasurementRecord& record);

}  // namespace qlyap
