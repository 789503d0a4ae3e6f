#include "qlyap/snapshot.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <string>

#include "qlyap/binary_io.hpp"
#include "qlyap/errors.hpp"

namespace qlyap {

namespace {

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, p, static_cast<uInt>(n)));
}

void put_wavefunction(binio::Writer& w, const Wavefunction& psi) {
  w.f64(psi.time);
  for (const auto& z : psi.amplitudes) {
    w.f64(z.real());
    w.f64(z.imag());
  }
}

Wavefunction get_wavefunction(binio::Reader& r, const GridSpec& grid) {
  Wavefunction psi{grid, ComplexVector(grid.n_points), r.f64()};
  for (auto& z : psi.amplitudes) {
    const double re = r.f64();
    const double im = r.f64();
    z = Complex(re, im);
  }
  return psi;
}

void put_series(binio::Writer& w, const std::vector<double>& v) {
  for (double x : v) w.f64(x);
}

std::vector<double> get_series(binio::Reader& r, std::uint64_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

}  // namespace

Snapshot make_snapshot(const LyapunovPair& pair, std::uint32_t config_hash, std::uint64_t master_seed) {
  Snapshot s;
  s.config_hash = config_hash;
  s.trajectory_id = pair.trajectory_id();
  s.master_seed = master_seed;
  s.k = pair.k();
  s.total_steps = pair.total_steps();
  s.noise_counter = pair.step();
  s.state = pair.state();
  return s;
}

std::vector<unsigned char> encode_snapshot(const Snapshot& snap) {
  const auto& st = snap.state;
  const auto& g = st.fiducial.grid;
  binio::Writer w;
  w.bytes("QSNP", 4);
  w.u32(kSnapshotFormatVersion);
  w.u32(snap.config_hash);
  w.u64(snap.trajectory_id);
  w.u64(snap.master_seed);
  w.f64(snap.k);
  w.u64(st.step);
  w.u64(snap.total_steps);
  w.f64(st.accumulated_log);
  w.u64(st.reseed_count);
  w.f64(g.x_min);
  w.f64(g.x_max);
  w.u64(g.n_points);
  w.f64(g.hbar);
  put_wavefunction(w, st.fiducial);
  w.u32(st.perturbed ? 1 : 0);
  if (st.perturbed) put_wavefunction(w, *st.perturbed);
  const auto& d = st.divergence;
  w.u64(d.times.size());
  put_series(w, d.times);
  put_series(w, d.delta_values);
  put_series(w, d.delta_x);
  put_series(w, d.accumulated_log);
  w.u64(snap.noise_counter);
  auto bytes = w.data();
  const std::uint32_t crc = crc_of(bytes.data(), bytes.size());
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(crc >> (8 * i)));
  return bytes;
}

Snapshot decode_snapshot(std::vector<unsigned char> bytes) {
  if (bytes.size() < 12) throw IntegrityError("snapshot: file too short");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (std::memcmp(bytes.data(), "QSNP", 4) != 0) throw IntegrityError("snapshot: bad magic");
  binio::Reader r(std::move(bytes));
  char magic[4];
  r.bytes(magic, 4);
  const auto version = r.u32();
  if (version != kSnapshotFormatVersion)
    throw IntegrityError("snapshot: format version " + std::to_string(version) + ", expected " +
                         std::to_string(kSnapshotFormatVersion));
  if (crc_of(r.data().data(), body) != stored) throw IntegrityError("snapshot: checksum mismatch (corrupted file)");

  Snapshot s;
  s.config_hash = r.u32();
  s.trajectory_id = r.u64();
  s.master_seed = r.u64();
  s.k = r.f64();
  auto& st = s.state;
  st.step = r.u64();
  s.total_steps = r.u64();
  st.accumulated_log = r.f64();
  st.reseed_count = r.u64();
  GridSpec g;
  g.x_min = r.f64();
  g.x_max = r.f64();
  g.n_points = r.u64();
  g.hbar = r.f64();
  if (g.n_points == 0 || g.n_points > (std::uint64_t{1} << 26) || r.remaining() < g.n_points * 16)
    throw IntegrityError("snapshot: implausible grid size");
  st.fiducial = get_wavefunction(r, g);
  const auto has_pert = r.u32();
  if (has_pert > 1) throw IntegrityError("snapshot: bad perturbed-state flag");
  if (has_pert) st.perturbed = get_wavefunction(r, g);
  const auto n = r.u64();
  if (n > r.remaining() / 32) throw IntegrityError("snapshot: implausible series length");
  st.divergence.times = get_series(r, n);
  st.divergence.delta_values = get_series(r, n);
  st.divergence.delta_x = get_series(r, n);
  st.divergence.accumulated_log = get_series(r, n);
  s.noise_counter = r.u64();
  if (r.position() != body) throw IntegrityError("snapshot: trailing bytes before checksum");
  return s;
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  const auto bytes = encode_snapshot(snap);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IntegrityError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IntegrityError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_snapshot(std::move(data));
  } catch (const IntegrityError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
}

LyapunovPair restore_pair(const Snapshot& snap, const SplitStepper& stepper, const LyapunovConfig& lcfg, double k,
                          std::uint32_t config_hash) {
  if (snap.config_hash != config_hash)
    throw ConfigError("snapshot was taken under a different configuration (hash " + std::to_string(snap.config_hash) +
                      ", current " + std::to_string(config_hash) + ")");
  if (snap.k != k) throw ConfigError("k: snapshot has k = " + diag(snap.k));
  if (!(snap.state.fiducial.grid == stepper.grid())) throw ConfigError("snapshot grid differs from the configured grid");
  LyapunovPair pair(stepper, k, lcfg, snap.state.fiducial, snap.trajectory_id);
  if (pair.total_steps() != snap.total_steps) throw ConfigError("t_max_periods: snapshot has a different step count");
  if (snap.noise_counter != snap.state.step) throw IntegrityError("snapshot: noise counter out of step with the state");
  pair.restore(snap.state);
  return pair;
}

}  // namespace qlyap
