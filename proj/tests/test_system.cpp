#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "tbf/config.hpp"
#include "tbf/error.hpp"
#include "tbf/system_params.hpp"

using namespace tbf;

namespace {

const char* kTableIni = R"(
[system]
omega_c_hz = 10.619e9
omega_c_g_hz = 10.628e9
omega_ge_hz = 7.813e9
alpha_hz = -340e6
g_hz = 156.1e6
kappa_ex_hz = 2.91e6
kappa_in_hz = 346e3
t1_ge_s = 26e-6
t2_ge_s = 15e-6
t1_ef_s = 15e-6
t2_ef_s = 16e-6
)";

std::string with_line(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("system-model") {

TEST_CASE("measured parameter table loads and omega_ef is filled from omega_ge + alpha") {
  const SystemParams p = load_system_params(ConfigDocument::parse(kTableIni));
  CHECK(p.omega_c == doctest::Approx(2 * M_PI * 10.619e9).epsilon(1e-15));
  CHECK(p.alpha < 0.0);
  CHECK(p.omega_ef == doctest::Approx(2 * M_PI * (7.813e9 - 340e6)).epsilon(1e-15));
  CHECK(p.kappa_in == doctest::Approx(2 * M_PI * 346e3));

  const SystemParams ref = reference_system_params();
  CHECK(ref.g == doctest::Approx(p.g).epsilon(1e-15));
  CHECK(ref.t2_ef == p.t2_ef);
}

TEST_CASE("load rejects coherence beyond 2 T1, missing keys, bad rates and unknown keys") {
  const std::string bad_t2 = with_line(kTableIni, "t2_ge_s = 15e-6", "t2_ge_s = 78e-6");
  CHECK_THROWS_WITH_AS(load_system_params(ConfigDocument::parse(bad_t2)), doctest::Contains("coherence exceeds 2*T1"),
                       ConfigError);
  CHECK_THROWS_AS(load_system_params(ConfigDocument::parse(with_line(kTableIni, "g_hz = 156.1e6", ""))), ConfigError);
  CHECK_THROWS_AS(load_system_params(ConfigDocument::parse(with_line(kTableIni, "kappa_ex_hz = 2.91e6",
                                                                     "kappa_ex_hz = 0"))),
                  ConfigError);
  CHECK_THROWS_AS(ConfigDocument::parse(with_line(kTableIni, "g_hz", "gg_hz")), ConfigError);
  const std::string inconsistent = std::string(kTableIni) + "omega_ef_hz = 7.5e9\n";
  CHECK_THROWS_WITH_AS(load_system_params(ConfigDocument::parse(inconsistent)),
                       doctest::Contains("omega_ef inconsistent"), ConfigError);
}

TEST_CASE("derived frequencies follow from the table by direct arithmetic") {
  const DerivedParams d = derive_params(reference_system_params());
  CHECK(angular_to_hz(d.omega_f0g1) == doctest::Approx(2 * 7.813e9 - 0.340e9 - 10.619e9).epsilon(1e-12));
  CHECK(angular_to_hz(d.kappa) == doctest::Approx(2.91e6 + 346e3).epsilon(1e-12));
  CHECK(angular_to_hz(d.delta) == doctest::Approx(7.813e9 - 10.619e9).epsilon(1e-12));
  CHECK(angular_to_hz(d.omega_f0g1) == doctest::Approx(4.667e9).epsilon(1e-9));

  const SystemParams p = reference_system_params();
  CHECK(d.kappa == p.kappa_ex + p.kappa_in);
  const DerivedParams again = derive_params(p);
  CHECK(std::memcmp(&d, &again, sizeof d) == 0);
}

TEST_CASE("LO matching returns the integer multiple or fails off-grid") {
  const double khz = 2 * M_PI * 1e3;
  const double ghz10 = 2 * M_PI * 10e9;
  CHECK(validate_lo_matching({ghz10, ghz10, ghz10, khz}) == 0);
  CHECK(validate_lo_matching({ghz10, ghz10 + 2.5 * khz, ghz10, khz}) == 5);
  CHECK_THROWS_WITH_AS(validate_lo_matching({ghz10, ghz10 + 0.2 * khz, ghz10, khz}, 0.01),
                       "phase coherence condition violated", ConfigError);

  // Shifting one LO by k repetition periods moves N_r by -k, +2k or -k.
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(-50, 50);
  const LoFrequencies base{2 * M_PI * 10.578e9, 2 * M_PI * 7.6e9, 2 * M_PI * 4.622e9, khz};
  const std::int64_t n0 = validate_lo_matching(base);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = pick(rng);
    LoFrequencies a = base, b = base, c = base;
    a.omega_c_lo += k * khz;
    b.omega_geef_lo += k * khz;
    c.omega_f0g1_lo += k * khz;
    CHECK(validate_lo_matching(a) == n0 - k);
    CHECK(validate_lo_matching(b) == n0 + 2 * k);
    CHECK(validate_lo_matching(c) == n0 - k);
  }
}

TEST_CASE("effective coupling: zero drive, table magnitude, phase and linearity") {
  const SystemParams p = reference_system_params();
  const TimeGrid grid{0.0, 1e-9, 16};
  CHECK(effective_coupling(p, SampledWaveform::zeros(grid)).energy() == 0.0);

  // sqrt(2) alpha g^2 / (4 (w_c - w_ge)^3), evaluated in Hz since the ratio is scale free.
  const double alpha = -340e6, g = 156.1e6, det = 10.619e9 - 7.813e9;
  const double factor = std::sqrt(2.0) * alpha * g * g / (4.0 * det * det * det);
  const SampledWaveform drive =
      SampledWaveform::from_function(grid, [](double) { return cplx{2 * M_PI * 16.6e9, 0.0}; });
  const SampledWaveform ge = effective_coupling(p, drive);
  CHECK(angular_to_hz(ge[3].real()) == doctest::Approx(16.6e9 * factor).epsilon(1e-12));
  CHECK(std::abs(angular_to_hz(ge[3].real())) == doctest::Approx(2.2e6).epsilon(0.01));

  const double theta = 0.37;
  const SampledWaveform rotated = effective_coupling(p, drive * std::polar(1.0, theta));
  // Negative prefactor: the coupling carries the drive phase plus pi.
  CHECK(std::remainder(std::arg(rotated[5]) - (theta + M_PI), 2 * M_PI) == doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1e9);
  auto random_wave = [&] {
    return SampledWaveform::from_function(grid, [&](double) { return cplx{n(rng), n(rng)}; });
  };
  const SampledWaveform w1 = random_wave(), w2 = random_wave();
  const cplx a{0.3, -1.2}, b{2.0, 0.5};
  const SampledWaveform lhs = effective_coupling(p, w1 * a + w2 * b);
  const SampledWaveform rhs = effective_coupling(p, w1) * a + effective_coupling(p, w2) * b;
  for (std::size_t k = 0; k < grid.count; ++k) CHECK(std::abs(lhs[k] - rhs[k]) <= 1e-12 * std::abs(lhs[k]) + 1e-6);

  SystemParams singular = p;
  singular.omega_c = singular.omega_ge;
  CHECK_THROWS_AS(effective_coupling_factor(singular), ConfigError);
  CHECK(drive_for_coupling(p, effective_coupling_factor(p) * 5.0) == doctest::Approx(5.0));
}

}  // TEST_SUITE
