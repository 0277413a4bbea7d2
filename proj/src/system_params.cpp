#include "tbf/system_params.hpp"

#include <cmath>
#include <string>

#include "tbf/error.hpp"

namespace tbf {

SystemParams reference_system_params() {
  SystemParams p;
  p.omega_c = hz_to_angular(10.619e9);
  p.omega_c_g = hz_to_angular(10.628e9);
  p.omega_ge = hz_to_angular(7.813e9);
  p.alpha = hz_to_angular(-340e6);
  p.omega_ef = p.omega_ge + p.alpha;
  p.g = hz_to_angular(156.1e6);
  p.kappa_ex = hz_to_angular(2.91e6);
  p.kappa_in = hz_to_angular(346e3);
  p.t1_ge = 26e-6;
  p.t2_ge = 15e-6;
  p.t1_ef = 15e-6;
  p.t2_ef = 16e-6;
  return p;
}

void validate(const SystemParams& p) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  for (double w : {p.omega_c, p.omega_c_g, p.omega_ge, p.omega_ef, p.g}) {
    if (!(w > 0.0) || !std::isfinite(w)) fail("frequencies and coupling must be positive and finite");
  }
  if (!(p.alpha < 0.0)) fail("anharmonicity must be negative for a transmon");
  if (!(p.kappa_ex > 0.0)) fail("non-positive rate: kappa_ex must be > 0");
  if (!(p.kappa_in >= 0.0)) fail("non-positive rate: kappa_in must be >= 0");
  if (!(p.t1_ge > 0.0 && p.t2_ge > 0.0 && p.t1_ef > 0.0 && p.t2_ef > 0.0)) {
    fail("non-positive rate: all T1 and T2 must be > 0");
  }
  if (p.t2_ge > 2.0 * p.t1_ge) fail("t2_ge: coherence exceeds 2*T1");
  if (p.t2_ef > 2.0 * p.t1_ef) fail("t2_ef: coherence exceeds 2*T1");
  const double expected_ef = p.omega_ge + p.alpha;
  if (std::abs(p.omega_ef - expected_ef) > 1e-6 * std::abs(expected_ef)) {
    fail("omega_ef inconsistent with omega_ge + alpha");
  }
  if (p.omega_c == p.omega_ge) fail("cavity and qubit frequencies coincide");
}

SystemParams load_system_params(const ConfigDocument& doc) {
  if (!doc.has_section("system")) throw ConfigError("missing required section [system]");
  const std::string s = "system";
  SystemParams p;
  p.omega_c = hz_to_angular(doc.require_double(s, "omega_c_hz"));
  p.omega_c_g = hz_to_angular(doc.require_double(s, "omega_c_g_hz"));
  p.omega_ge = hz_to_angular(doc.require_double(s, "omega_ge_hz"));
  p.alpha = hz_to_angular(doc.require_double(s, "alpha_hz"));
  p.omega_ef = doc.has(s, "omega_ef_hz") ? hz_to_angular(doc.require_double(s, "omega_ef_hz")) : p.omega_ge + p.alpha;
  p.g = hz_to_angular(doc.require_double(s, "g_hz"));
  p.kappa_ex = hz_to_angular(doc.require_double(s, "kappa_ex_hz"));
  p.kappa_in = hz_to_angular(doc.require_double(s, "kappa_in_hz"));
  p.t1_ge = doc.require_double(s, "t1_ge_s");
  p.t2_ge = doc.require_double(s, "t2_ge_s");
  p.t1_ef = doc.require_double(s, "t1_ef_s");
  p.t2_ef = doc.require_double(s, "t2_ef_s");
  validate(p);
  return p;
}

std::optional<LoFrequencies> load_lo_frequencies(const ConfigDocument& doc) {
  if (!doc.has_section("lo")) return std::nullopt;
  LoFrequencies lo;
  lo.omega_c_lo = hz_to_angular(doc.require_double("lo", "omega_c_lo_hz"));
  lo.omega_geef_lo = hz_to_angular(doc.require_double("lo", "omega_geef_lo_hz"));
  lo.omega_f0g1_lo = hz_to_angular(doc.require_double("lo", "omega_f0g1_lo_hz"));
  lo.omega_rep = hz_to_angular(doc.require_double("lo", "omega_rep_hz"));
  if (!(lo.omega_c_lo > 0 && lo.omega_geef_lo > 0 && lo.omega_f0g1_lo > 0 && lo.omega_rep > 0)) {
    throw ConfigError("LO frequencies and repetition frequency must be positive");
  }
  return lo;
}

DerivedParams derive_params(const SystemParams& p) {
  return {.kappa = p.kappa_ex + p.kappa_in,
          .delta = p.omega_ge - p.omega_c,
          .omega_f0g1 = 2.0 * p.omega_ge + p.alpha - p.omega_c};
}

std::int64_t validate_lo_matching(const LoFrequencies& lo, double tol) {
  if (!(lo.omega_rep > 0.0)) throw ConfigError("repetition frequency must be positive");
  const double combination = 2.0 * lo.omega_geef_lo - lo.omega_c_lo - lo.omega_f0g1_lo;
  const double ratio = combination / lo.omega_rep;
  const double n = std::round(ratio);
  if (std::abs(combination - n * lo.omega_rep) > tol * lo.omega_rep) {
    throw ConfigError("phase coherence condition violated");
  }
  return static_cast<std::int64_t>(n);
}

double effective_coupling_factor(const SystemParams& p) {
  const double detuning = p.omega_c - p.omega_ge;
  if (detuning == 0.0) throw ConfigError("effective coupling is singular for omega_c == omega_ge");
  return std::sqrt(2.0) * p.alpha * p.g * p.g / (4.0 * detuning * detuning * detuning);
}

SampledWaveform effective_coupling(const SystemParams& p, const SampledWaveform& omega_drive) {
  return omega_drive * cplx{effective_coupling_factor(p), 0.0};
}

double drive_for_coupling(const SystemParams& p, double g_eff) { return g_eff / effective_coupling_factor(p); }

}  // namespace tbf
