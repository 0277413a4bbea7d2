#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "tbf/error.hpp"
#include "tbf/experiments.hpp"
#include "tbf/io.hpp"

using namespace tbf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tbf_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, 40.0 * u(rng));
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("density matrix JSON round trip keeps basis order") {
  CMatrix m = CMatrix::Zero(16, 16);
  m(1, 1) = 0.25;
  m(4, 4) = 0.75;
  m(1, 4) = cplx(0.1, 0.2);
  m(4, 1) = cplx(0.1, -0.2);
  const FockDensityMatrix rho(2, 3, m);
  const Json j = density_matrix_to_json(rho);
  CHECK(j["modes"] == 2);
  CHECK(j["cutoff"] == 3);
  CHECK(j["entries"][1][4][1].get<double>() == 0.2);
  const FockDensityMatrix back = density_matrix_from_json(Json::parse(j.dump()));
  CHECK(back.matrix() == rho.matrix());
}

TEST_CASE("sha256 of a known byte string and manifest verification") {
  const fs::path dir = scratch("manifest");
  {
    std::ofstream f(dir / "a.txt", std::ios::binary);
    f << "abc";
  }
  CHECK(sha256_file(dir / "a.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  RunManifest m;
  m.command = "test";
  m.seed = 9;
  m.write(dir, {"a.txt"});
  CHECK(verify_manifest(dir).empty());
  {
    std::ofstream f(dir / "a.txt", std::ios::binary);
    f << "abd";
  }
  const auto bad = verify_manifest(dir);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == "a.txt");
}

TEST_CASE("experiment config: shipped file, overrides, rejection of bad values") {
  const ExperimentConfig shipped =
      load_experiment_config(ConfigDocument::load(fs::path(TBF_SOURCE_DIR) / "config" / "system.ini"));
  const ExperimentConfig defaults;
  CHECK(shipped.pulse.width == defaults.pulse.width);
  CHECK(shipped.pulse.phase_offset == doctest::Approx(defaults.pulse.phase_offset));
  CHECK(shipped.bootstrap == defaults.bootstrap);
  REQUIRE(shipped.lo);
  CHECK(validate_lo_matching(*shipped.lo, shipped.lo_tolerance) == 0);

  const ExperimentConfig c = load_experiment_config(ConfigDocument::parse("[tomography]\ncutoff = 4\n[run]\nseed = 7\n"));
  CHECK(c.cutoff == 4);
  CHECK(c.seed == 7);
  CHECK_THROWS_AS(load_experiment_config(ConfigDocument::parse("[tomography]\ncutoff = four\n")), ConfigError);
  CHECK_THROWS_AS(load_experiment_config(ConfigDocument::parse("[dynamics]\nframe = rotating\n")), ConfigError);
  CHECK_THROWS_AS(ConfigDocument::parse("[tomography]\nbootstraps = 4\n"), ConfigError);
  CHECK_THROWS_AS(ConfigDocument::parse("[extra]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_experiment_config(ConfigDocument::parse(
                      "[lo]\nomega_c_lo_hz = 10.578e9\nomega_geef_lo_hz = 7.6e9\nomega_f0g1_lo_hz = 4.62200035e9\n"
                      "omega_rep_hz = 1e3\n")),
                  ConfigError);
}

TEST_CASE("TBF_SEED overrides the configured seed") {
  ExperimentConfig cfg;
  ::setenv("TBF_SEED", "123", 1);
  apply_seed_environment(cfg);
  CHECK(cfg.seed == 123);
  ::setenv("TBF_SEED", "12x", 1);
  CHECK_THROWS_AS(apply_seed_environment(cfg), ConfigError);
  ::unsetenv("TBF_SEED");
  ExperimentConfig untouched;
  apply_seed_environment(untouched);
  CHECK(untouched.seed == ExperimentConfig{}.seed);
}

TEST_CASE("state specs parse and print") {
  CHECK(StateSpec::parse("timebin:+i").label == "+i");
  CHECK(StateSpec::parse("singlerail:-").kind == QubitKind::SingleRail);
  CHECK(StateSpec::parse("fock:2").fock_number == 2);
  CHECK(StateSpec::parse("transmon:0").to_string() == "transmon:0");
  CHECK_THROWS(StateSpec::parse("timebin:x"));
  CHECK_THROWS(StateSpec::parse("qudit:0"));
  CHECK_THROWS(StateSpec::parse("fock:-1"));
}

}  // TEST_SUITE
