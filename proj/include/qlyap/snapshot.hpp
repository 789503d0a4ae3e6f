#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qlyap/lyapunov.hpp"

namespace qlyap {

// One Lyapunov pair frozen at a step boundary. Little-endian binary:
//   "QSNP", u32 version, u32 config_hash, u64 trajectory_id, u64 master_seed,
//   f64 k, u64 step, u64 total_steps, f64 accumulated_log, u64 reseed_count,
//   grid (f64 x_min, f64 x_max, u64 n_points, f64 hbar),
//   fiducial (f64 time, n x (f64 re, f64 im)), u32 has_perturbed [+ perturbed],
//   u64 n_renorm, then times, delta_values, delta_x, accumulated_log (n_renorm f64 each),
//   u64 noise_counter, and a trailing u32 CRC-32 of everything before it.
inline constexpr std::uint32_t kSnapshotFormatVersion = 1;

struct Snapshot {
  std::uint32_t config_hash = 0;
  std::uint64_t trajectory_id = 0;
  std::uint64_t master_seed = 0;
  double k = 0.0;
  std::uint64_t total_steps = 0;
  std::uint64_t noise_counter = 0;  // next step whose increment is drawn
  LyapunovPair::State state;
};

Snapshot make_snapshot(const LyapunovPair& pair, std::uint32_t config_hash, std::uint64_t master_seed);

// Written to a temporary file and renamed, so an interrupted write never
// leaves a truncated snapshot under the final name.
void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
std::vector<unsigned char> encode_snapshot(const Snapshot& snap);

// Throws IntegrityError on bad magic, unsupported version, checksum
// mismatch or truncation; nothing is returned in those cases.
Snapshot read_snapshot(const std::filesystem::path& path);
Snapshot decode_snapshot(std::vector<unsigned char> bytes);

// Rebuilds the pair. Throws ConfigError when the snapshot was taken under a
// different physics configuration (hash, k or step count differ).
LyapunovPair restore_pair(const Snapshot& snap, const SplitStepper& stepper, const LyapunovConfig& lcfg, double k,
                          std::uint32_t config_hash);

}  // namespace qlyap
