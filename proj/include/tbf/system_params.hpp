#pragma once

#include <cstdint>
#include <numbers>
#include <optional>

#include "tbf/config.hpp"
#include "tbf/waveform.hpp"

namespace tbf {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Converts an ordinary frequency in Hz to an angular frequency in rad/s.
constexpr double hz_to_angular(double hz) { return kTwoPi * hz; }
constexpr double angular_to_hz(double omega) { return omega / kTwoPi; }

/// Measured qubit-cavity parameters. Frequencies and rates are angular (rad/s),
/// times in seconds.
struct SystemParams {
  double omega_c = 0.0;    // bare cavity
  double omega_c_g = 0.0;  // dressed cavity, qubit in |g>
  double omega_ge = 0.0;
  double omega_ef = 0.0;
  double alpha = 0.0;  // anharmonicity, negative for a transmon
  double g = 0.0;      // qubit-cavity coupling
  double kappa_ex = 0.0;
  double kappa_in = 0.0;
  double t1_ge = 0.0;
  double t2_ge = 0.0;
  double t1_ef = 0.0;
  double t2_ef = 0.0;
};

struct DerivedParams {
  double kappa = 0.0;       // kappa_ex + kappa_in
  double delta = 0.0;       // omega_ge - omega_c
  double omega_f0g1 = 0.0;  // 2 omega_ge + alpha - omega_c
};

/// Local-oscillator frequencies that must stay phase coherent across repetitions.
struct LoFrequencies {
  double omega_c_lo = 0.0;
  double omega_geef_lo = 0.0;
  double omega_f0g1_lo = 0.0;
  double omega_rep = 0.0;
};

/// Built-in measured values (the canonical config/system.ini carries the same numbers).
SystemParams reference_system_params();

/// Reads the [system] section. Frequencies are given in Hz, times in seconds.
/// `omega_ef_hz` may be omitted, in which case it is filled as omega_ge + alpha.
/// Throws ConfigError on missing keys or violated invariants.
SystemParams load_system_params(const ConfigDocument& doc);

/// Reads the optional [lo] section.
std::optional<LoFrequencies> load_lo_frequencies(const ConfigDocument& doc);

/// Checks every SystemParams invariant; throws ConfigError with the first violation.
void validate(const SystemParams& p);

DerivedParams derive_params(const SystemParams& p);

/// Returns N_r such that 2 w_geef - w_c - w_f0g1 = N_r w_rep within tol * w_rep.
/// Throws ConfigError("phase coherence condition violated") otherwise.
std::int64_t validate_lo_matching(const LoFrequencies& lo, double tol = 1e-6);

/// Prefactor relating the cavity drive to the f0-g1 coupling:
/// g_eff = sqrt(2) alpha g^2 / (4 (omega_c - omega_ge)^3) * Omega.
double effective_coupling_factor(const SystemParams& p);

/// Pointwise microwave-induced f0-g1 coupling for a cavity drive Omega(t).
SampledWaveform effective_coupling(const SystemParams& p, const SampledWaveform& omega_drive);

/// Drive amplitude needed for a target coupling; inverse of effective_coupling_factor.
double drive_for_coupling(const SystemParams& p, double g_eff);

}  // namespace tbf
