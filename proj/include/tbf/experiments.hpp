#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tbf/config.hpp"
#include "tbf/dynamics.hpp"
#include "tbf/io.hpp"
#include "tbf/pulses.hpp"
#include "tbf/system_params.hpp"
#include "tbf/tomography.hpp"

namespace tbf {

/// Everything a command needs, resolved from built-in defaults, the config file and overrides.
struct ExperimentConfig {
  SystemParams system = reference_system_params();
  std::optional<LoFrequencies> lo;
  double lo_tolerance = 1e-6;

  CouplingPulseSpec pulse{550e-9, hz_to_angular(1.3e6), hz_to_angular(-1.66e6), 0.74 * std::numbers::pi};
  double stark_coeff = hz_to_angular(1.66e6);  // rad/s at the pulse peak; 0 disables injection
  double bin_separation = 950e-9;
  double control_width = 15e-9;
  double beta_ge = 0.92;
  double beta_ef = 1.08;

  double dt = 0.1e-9;
  double window = 0.95e-6;
  Frame frame = Frame::Interaction;

  int samples_per_setting = 1000;
  int phases = 12;
  double eta_meas = 0.67;
  double eta_gen = 0.83;
  int cutoff = 3;
  int bootstrap = 50;  // desk scale; --paper-scale restores 250
  int bins = 50;
  double q_max = 5.0;

  std::uint64_t seed = 20240501;
  std::filesystem::path output_dir = "out";

  /// Dynamics options including the Stark injection referenced to the pulse peak.
  DynamicsOptions dynamics_options() const;
  MeasurementSettings measurement_settings() const;
  TomographyOptions tomography_options() const;
  /// Flat snapshot for manifests.
  Json to_json() const;
};

/// Overlays a parsed config document on the defaults. Throws ConfigError on bad values.
ExperimentConfig load_experiment_config(const ConfigDocument& doc);

/// Applies TBF_SEED when set; throws ConfigError if it is not an unsigned integer.
void apply_seed_environment(ExperimentConfig& cfg);

// --- generate ---------------------------------------------------------------

struct GenerateResult {
  DynamicsResult dynamics;
  std::optional<TemporalModes> modes;  // empty when a bin carries no energy
  double early_energy = 0.0;
  double late_energy = 0.0;
  EfficiencyReport efficiency;
  std::vector<std::string> files;
};

/// Two-bin emission for the given initial qubit-cavity state; writes trace.csv, summary.json,
/// coupling.csv and coupling.json under `out`.
GenerateResult cmd_generate(const ExperimentConfig& cfg, const InitialState& init, const std::filesystem::path& out);

// --- efficiency -------------------------------------------------------------

struct EfficiencyResult {
  EfficiencyReport report;
  double runtime_s = 0.0;
  std::vector<std::string> files;
};

EfficiencyResult cmd_efficiency(const ExperimentConfig& cfg, const std::filesystem::path& out);

// --- tomography -------------------------------------------------------------

/// Parsed `--state` value: "timebin:+", "singlerail:-i", "transmon:0" or "fock:<n>".
struct StateSpec {
  QubitKind kind = QubitKind::TimeBin;
  std::string label = "+";
  std::optional<int> fock_number;

  static StateSpec parse(const std::string& text);
  std::string to_string() const;
};

struct TomographyRequest {
  StateSpec state;
  bool per_shot_drift = false;
  bool loss_correct = false;
  std::optional<double> eta;  // overall efficiency; replaces eta_gen * eta_meas when set
  bool wigner = false;
};

struct TomographyCommandResult {
  TomographyRun run;
  std::optional<double> wigner_origin;
  std::vector<std::string> files;
};

TomographyCommandResult cmd_tomography(const ExperimentConfig& cfg, const TomographyRequest& request,
                                       const std::filesystem::path& out);

// --- phase reference --------------------------------------------------------

struct PhaseReferenceRow {
  std::string encoding;  // "single-rail" or "time-bin"
  std::string clock;     // "shared" or "separate"
  double fidelity = 0.0;
  double sd = 0.0;
};

struct PhaseReferenceResult {
  std::vector<PhaseReferenceRow> rows;
  std::vector<std::string> files;

  const PhaseReferenceRow& row(const std::string& encoding, const std::string& clock) const;
};

/// |+> in both encodings with and without a per-shot common phase drift.
PhaseReferenceResult cmd_phase_reference(const ExperimentConfig& cfg, const std::filesystem::path& out);

// --- chirp sweep ------------------------------------------------------------

struct ChirpSweepRequest {
  double c_stark = hz_to_angular(1.66e6);  // rad/s
  double min = hz_to_angular(-3.5e6);
  double max = hz_to_angular(1.5e6);
  double step = hz_to_angular(0.05e6);
};

struct ChirpSweepResult {
  std::vector<double> chirp;          // rad/s
  std::vector<double> ground_population;
  double argmax = 0.0;                // rad/s
  std::vector<std::string> files;
};

/// Final ground-state population after a single |f0> emission as a function of the chirp coefficient.
ChirpSweepResult cmd_chirp_sweep(const ExperimentConfig& cfg, const ChirpSweepRequest& request,
                                 const std::filesystem::path& out);

}  // namespace tbf
