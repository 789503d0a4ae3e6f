#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qlyap/config.hpp"
#include "qlyap/errors.hpp"
#include "qlyap/snapshot.hpp"

using namespace qlyap;

namespace {

struct Fixture {
  RunConfig cfg = parse_config("hbar = 16\nk = 0.02\nwarmup_periods = 0.25\nt_max_periods = 1\nmaster_seed = 8");
  SplitStepper st{cfg.grid(), cfg.hamiltonian(), cfg.propagator()};
  LyapunovConfig lcfg = cfg.lyapunov();
  NoiseStream noise{cfg.master_seed, 2, cfg.dt()};

  LyapunovPair pair(std::uint64_t steps) const {
    LyapunovPair p(st, cfg.k, lcfg, cfg.initial_state(), 2);
    p.advance(steps, stream_source(noise));
    return p;
  }
};

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qlyap_test_snapshot";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("encode/decode round trip, before and after the perturbation starts") {
  Fixture f;
  for (std::uint64_t steps : {100u, 1000u}) {
    const auto p = f.pair(steps);
    const auto snap = make_snapshot(p, config_hash(f.cfg), f.cfg.master_seed);
    CHECK(snap.noise_counter == steps);
    const auto back = decode_snapshot(encode_snapshot(snap));
    CHECK(back.config_hash == snap.config_hash);
    CHECK(back.trajectory_id == 2);
    CHECK(back.k == 0.02);
    CHECK(back.total_steps == p.total_steps());
    CHECK(back.state.step == steps);
    CHECK(back.state.fiducial.amplitudes == p.fiducial().amplitudes);
    CHECK(back.state.fiducial.time == p.fiducial().time);
    CHECK(back.state.perturbed.has_value() == p.perturbed().has_value());
    CHECK(back.state.divergence.accumulated_log == p.divergence().accumulated_log);
  }
}

TEST_CASE("checkpoint, restore and continue is bitwise identical to an uninterrupted run") {
  Fixture f;
  auto whole = f.pair(0);
  whole.advance(whole.total_steps(), stream_source(f.noise));

  const auto half = f.pair(1000);
  const auto path = scratch("mid.qsnp");
  write_snapshot(path, make_snapshot(half, config_hash(f.cfg), f.cfg.master_seed));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  auto resumed = restore_pair(read_snapshot(path), f.st, f.lcfg, f.cfg.k, config_hash(f.cfg));
  CHECK(resumed.step() == 1000);
  resumed.advance(resumed.total_steps(), stream_source(f.noise));
  CHECK(resumed.accumulated_log() == whole.accumulated_log());
  CHECK(resumed.exponent().lambda_t == whole.exponent().lambda_t);
  CHECK(resumed.fiducial().amplitudes == whole.fiducial().amplitudes);
}

TEST_CASE("restore under a different configuration is a config error") {
  Fixture f;
  const auto snap = make_snapshot(f.pair(600), config_hash(f.cfg), f.cfg.master_seed);
  auto altered = f.cfg;
  altered.k = 0.03;
  CHECK_THROWS_AS(restore_pair(snap, f.st, f.lcfg, altered.k, config_hash(altered)), ConfigError);
  // Hash forged to match but k differs: still caught.
  CHECK_THROWS_AS(restore_pair(snap, f.st, f.lcfg, altered.k, config_hash(f.cfg)), ConfigError);
  auto longer = f.lcfg;
  longer.t_max *= 2;
  CHECK_THROWS_AS(restore_pair(snap, f.st, longer, f.cfg.k, config_hash(f.cfg)), ConfigError);
}

TEST_CASE("damaged snapshots are integrity errors") {
  Fixture f;
  const auto bytes = encode_snapshot(make_snapshot(f.pair(700), config_hash(f.cfg), f.cfg.master_seed));
  SUBCASE("flipped payload byte") {
    auto b = bytes;
    b[b.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(decode_snapshot(b), IntegrityError);
  }
  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    CHECK_THROWS_AS(decode_snapshot(b), IntegrityError);
  }
  SUBCASE("unsupported version") {
    auto b = bytes;
    b[4] = 2;
    CHECK_THROWS_WITH_AS(decode_snapshot(b), doctest::Contains("version"), IntegrityError);
  }
  SUBCASE("truncated") {
    auto b = bytes;
    b.resize(b.size() - 9);
    CHECK_THROWS_AS(decode_snapshot(b), IntegrityError);
    b.resize(10);
    CHECK_THROWS_AS(decode_snapshot(b), IntegrityError);
    CHECK_THROWS_AS(decode_snapshot({}), IntegrityError);
  }
  SUBCASE("trailing garbage") {
    auto b = bytes;
    b.push_back(0);
    CHECK_THROWS_AS(decode_snapshot(b), IntegrityError);
  }
  SUBCASE("on disk") {
    const auto path = scratch("bad.qsnp");
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), 100);
    CHECK_THROWS_AS(read_snapshot(path), IntegrityError);
    CHECK_THROWS_AS(read_snapshot(scratch("missing.qsnp")), IntegrityError);
  }
}

TEST_CASE("header layout is little-endian") {
  Fixture f;
  const auto b = encode_snapshot(make_snapshot(f.pair(10), 0x01020304u, 8));
  CHECK(std::string(b.begin(), b.begin() + 4) == "QSNP");
  CHECK(b[4] == kSnapshotFormatVersion);
  CHECK(b[8] == 0x04);
  CHECK(b[11] == 0x01);
}
