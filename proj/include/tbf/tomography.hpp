#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tbf/fock.hpp"

namespace tbf {

/// Quadrature histogram bins: `inner_bins` uniform bins on [-q_max, q_max] plus one
/// overflow bin on each side, so the bins partition the real line.
struct Binning {
  double q_max = 5.0;
  int inner_bins = 50;

  int count() const { return inner_bins + 2; }
  double width() const { return 2.0 * q_max / inner_bins; }
  /// Bin 0 is (-inf, -q_max), bin count()-1 is [q_max, inf).
  int index(double q) const;
  double lower(int bin) const;
  double upper(int bin) const;
};

/// `count` phases k * 2 pi / count, k = 0 .. count-1.
std::vector<double> uniform_phases(int count);

struct MeasurementSettings {
  int modes = 1;
  std::vector<double> phases = uniform_phases(12);  // per mode; two modes use every (phi_E, phi_L) pair
  int samples_per_setting = 1000;
  double eta_meas = 1.0;
  Binning bins;
  std::uint64_t seed = 1;
  /// Draw a fresh common phase theta ~ U[0, 2 pi) for every shot and add it to each mode's phase.
  bool per_shot_drift = false;

  std::size_t setting_count() const;
  /// (phi_E, phi_L) of a setting; setting s = i_E * phases.size() + i_L. Single mode leaves phi_L = 0.
  std::array<double, 2> setting_phases(std::size_t s) const;
};

struct QuadratureDataset {
  int modes = 1;
  std::vector<std::array<double, 2>> phases;               // per setting
  std::vector<std::vector<std::array<double, 2>>> shots;   // per setting: (q_E, q_L); q_L unused for one mode
  std::uint64_t seed = 0;
  std::string state;
  double eta_meas = 1.0;
};

/// Samples the loss-degraded state's exact quadrature distribution. Each setting gets its own
/// generator seeded from (seed, setting index), so output is reproducible and order independent.
QuadratureDataset sample_quadratures(const FockDensityMatrix& state, const MeasurementSettings& settings,
                                     const std::string& description = "");

/// Quadrature POVM: per bin, B_nm = int_bin psi_n psi_m dq; the element for phase phi is
/// B_nm exp(i (n - m) phi), so tr[Pi rho] = int_bin P(q | phi) dq.
struct PovmSet {
  int modes = 1;
  int cutoff = 3;
  Binning bins;
  std::vector<double> phases;
  std::vector<Eigen::MatrixXd> bin_integrals;

  std::size_t setting_count() const;
  /// Single-mode element for (phase index, bin).
  CMatrix element(std::size_t phase_index, int bin) const;
  /// Full element for a setting and a joint bin index (b_E * bins + b_L for two modes).
  CMatrix element_for_setting(std::size_t setting, std::size_t joint_bin) const;
  /// max over phases of || sum_bins Pi - I ||_max.
  double completeness_residual() const;
};

PovmSet build_povm(const MeasurementSettings& settings, int cutoff);

/// Histogram counts per setting; each row has bins^modes entries.
struct BinnedCounts {
  int modes = 1;
  int bins = 0;
  std::vector<std::vector<double>> counts;
  double total = 0.0;
};

BinnedCounts bin_counts(const QuadratureDataset& data, const Binning& bins);

struct MleConfig {
  int max_iterations = 2000;
  double tolerance = 1e-10;        // stop when the per-sample log-likelihood gain drops below this
  double probability_floor = 1e-12;
  double monotonicity_tolerance = 1e-9;
  bool extrapolate = true;         // also try N[R^t rho R^t] for t = 2, 4, ... each iteration
  double max_extrapolation = 64.0;
  std::optional<CMatrix> initial;  // defaults to the maximally mixed state
};

struct MleResult {
  FockDensityMatrix rho;
  int iterations = 0;
  double loglik = 0.0;               // per-sample
  std::vector<double> loglik_trace;  // per-sample, one entry per accepted iterate
  std::size_t floored_bins = 0;
  int diluted_steps = 0;             // iterations where the plain R rho R step was damped
  bool converged = false;
};

/// Iterative R rho R reconstruction. When a plain step would lower the likelihood the step is
/// damped to rho <- N[(I + eps R) rho (I + eps R)] with eps halved until it does not, so the
/// likelihood trace is non-decreasing. Throws NumericalError if an iterate breaks the
/// density-matrix invariants or damping fails.
MleResult mle_reconstruct(const BinnedCounts& counts, const PovmSet& povm, const MleConfig& config = {});

struct BootstrapResult {
  int resamples = 0;
  std::vector<double> estimate;  // estimator on the full data
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> lo3;  // mean - 3 sd
  std::vector<double> hi3;  // mean + 3 sd
  std::vector<std::vector<double>> replicates;
};

using DatasetEstimator = std::function<std::vector<double>(const QuadratureDataset&)>;
using SampleEstimator = std::function<std::vector<double>(const std::vector<double>&)>;

/// Resamples shots with replacement within every setting and re-runs the estimator.
BootstrapResult bootstrap(const QuadratureDataset& data, const DatasetEstimator& estimator, int resamples,
                          std::uint64_t seed);
/// Plain resampling of a list of scalar draws.
BootstrapResult bootstrap(const std::vector<double>& samples, const SampleEstimator& estimator, int resamples,
                          std::uint64_t seed);

struct MarginalFit {
  std::vector<double> populations;  // P_0 .. P_max_n
  std::vector<double> ci_low;       // 95 % bootstrap percentile interval
  std::vector<double> ci_high;
  int iterations = 0;
};

/// Maximum-likelihood fit of a phase-averaged quadrature histogram to sum_n P_n |psi_n(q)|^2,
/// solved by expectation-maximization on the simplex.
MarginalFit fit_marginal_photon_populations(const std::vector<double>& samples, int max_n, const Binning& bins = {},
                                            int resamples = 200, std::uint64_t seed = 1);

enum class QubitKind { TransmonSim, SingleRail, TimeBin };

struct ChannelStack {
  double eta = 1.0;             // pure loss applied to every mode before measurement
  bool per_shot_drift = false;  // common phase drift, redrawn every shot
};

struct TomographyOptions {
  MeasurementSettings settings;  // modes and per_shot_drift are set from the encoding and channel stack
  int cutoff = 3;
  bool loss_correct = false;     // project onto the single-photon subspace (time-bin only)
  int bootstrap = 250;
  MleConfig mle;
};

/// The six Bloch-axis states: "0", "1", "+", "-", "+i", "-i".
const std::vector<std::string>& cardinal_labels();
/// Qubit amplitudes (alpha, beta) of a cardinal state label.
Eigen::Vector2cd cardinal_amplitudes(const std::string& label);

/// Encoded ideal state of a qubit in the chosen photonic kind.
FockDensityMatrix encode_qubit(QubitKind kind, const Eigen::Vector2cd& qubit, int cutoff);

struct TomographyRun {
  std::optional<QuadratureDataset> data;  // empty for the transmon readout
  std::optional<MleResult> mle;
  std::optional<FockDensityMatrix> rho;
  std::optional<Eigen::Matrix2cd> projected;
  double fidelity = 0.0;
  BootstrapResult fidelity_bootstrap;
};

/// Prepares `ideal`, pushes it through the channel stack, samples, reconstructs and scores the
/// result against `target`. For loss correction the target must be a time-bin state.
TomographyRun run_tomography(const FockDensityMatrix& ideal, const CVector& target, const ChannelStack& channels,
                             const TomographyOptions& options);

/// Transmon readout: X, Y and Z shots from the channel-degraded qubit, Bloch-vector estimate.
TomographyRun run_transmon_readout(const Eigen::Vector2cd& qubit, const ChannelStack& channels,
                                   const TomographyOptions& options);

struct CardinalRow {
  std::string label;
  double fidelity = 0.0;
  double sd = 0.0;
};

struct CardinalSuite {
  std::vector<CardinalRow> rows;
  double average = 0.0;
  double average_sd = 0.0;  // propagated from per-state bootstrap spreads
};

CardinalSuite cardinal_state_suite(QubitKind kind, const ChannelStack& channels, const TomographyOptions& options);

}  // namespace tbf
