#include "qlyap/noise.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qlyap/binary_io.hpp"
#include "qlyap/errors.hpp"

namespace qlyap {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
constexpr std::uint64_t kNoProvenance = std::numeric_limits<std::uint64_t>::max();

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

// 53-bit uniform in (0, 1].
inline double uniform_open0(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::generate(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t trajectory_id, double dt)
    : master_seed_(master_seed), trajectory_id_(trajectory_id), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
  if (!(dt > 0.0)) throw std::invalid_argument("NoiseStream: dt must be positive");
}

double NoiseStream::standard_normal(std::uint64_t step) const {
  const Philox4x32::Block ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                              static_cast<std::uint32_t>(trajectory_id_),
                              static_cast<std::uint32_t>(trajectory_id_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(master_seed_),
                                         static_cast<std::uint32_t>(master_seed_ >> 32)};
  const auto r = Philox4x32::generate(ctr, key);
  const double u1 = uniform_open0(r[0], r[1]);
  const double u2 = uniform_open0(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseStream::at(std::uint64_t step) const { return sqrt_dt_ * standard_normal(step); }

double NoiseStream::next() { return at(counter_++); }

void record_append(MeasurementRecord& record, double mean_x, double dt, double k, double dW) {
  if (!(k > 0.0)) throw std::invalid_argument("record_append: measurement strength k must be positive");
  record.dy.push_back(mean_x * dt + dW / std::sqrt(8.0 * k));
}

double increment_from_record(const MeasurementRecord& record, std::size_t step, double mean_x_current) {
  if (!(record.k > 0.0)) throw std::invalid_argument("increment_from_record: record has k <= 0");
  if (step >= record.dy.size())
    throw std::out_of_range("increment_from_record: step " + std::to_string(step) + " beyond record of " +
                            std::to_string(record.dy.size()) + " steps");
  return std::sqrt(8.0 * record.k) * (record.dy[step] - mean_x_current * record.dt);
}

void write_record(const std::filesystem::path& path, const MeasurementRecord& record) {
  binio::Writer w;
  w.bytes("QLYP", 4);
  w.u32(kRecordFormatVersion);
  w.f64(record.k);
  w.f64(record.dt);
  w.u64(record.dy.size());
  w.u64(record.master_seed.value_or(kNoProvenance));
  w.u64(record.trajectory_id.value_or(kNoProvenance));
  for (double v : record.dy) w.f64(v);
  w.save(path);
}

MeasurementRecord read_record(const std::filesystem::path& path) {
  binio::Reader r = binio::Reader::load(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, "QLYP", 4) != 0) throw IntegrityError("read_record: bad magic in " + path.string());
  const auto version = r.u32();
  if (version != kRecordFormatVersion)
    throw IntegrityError("read_record: unsupported format version " + std::to_string(version));
  MeasurementRecord rec;
  rec.k = r.f64();
  rec.dt = r.f64();
  const auto n = r.u64();
  const auto seed = r.u64();
  const auto id = r.u64();
  if (seed != kNoProvenance) rec.master_seed = seed;
  if (id != kNoProvenance) rec.trajectory_id = id;
  if (r.remaining() != n * sizeof(double))
    throw IntegrityError("read_record: payload size does not match n_steps = " + std::to_string(n));
  rec.dy.resize(n);
  for (auto& v : rec.dy) v = r.f64();
  return rec;
}

void write_record_csv(const std::filesystem::path& path, const MeasurementRecord& record) {
  std::ofstream out(path);
  if (!out) throw IntegrityError("write_record_csv: cannot open " + path.string());
  out << "step,t,dy\n";
  char buf[96];
  for (std::size_t i = 0; i < record.dy.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, static_cast<double>(i) * record.dt, record.dy[i]);
    out << buf;
  }
  if (!out) throw IntegrityError("write_record_csv: write failed for " + path.string());
}

}  // namespace qlyap
