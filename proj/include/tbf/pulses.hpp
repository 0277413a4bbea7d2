#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "tbf/waveform.hpp"

namespace tbf {

/// How the nominal width of a Gaussian control pulse maps onto its shape.
enum class GaussianWidth {
  Sigma,  // width is the standard deviation
  Fwhm,   // width is the full width at half maximum
};

struct GaussianShape {
  double width = 15e-9;
  GaussianWidth convention = GaussianWidth::Sigma;
  double truncation_sigmas = 3.0;  // envelope is zero beyond this many sigma

  double sigma() const;
  double half_span() const { return truncation_sigmas * sigma(); }
};

/// Real Gaussian envelope with the given peak centred at `center`.
/// Throws std::invalid_argument if the grid does not span the truncated support.
SampledWaveform gaussian_envelope(const GaussianShape& shape, double amplitude, const TimeGrid& grid, double center);

/// Raised-cosine coupling envelope peak * [1 - cos(2 pi (t - start) / w)] / 2 on [start, start + w].
SampledWaveform cosine_envelope(double width, double peak, const TimeGrid& grid, double start = 0.0);

enum class DragMode {
  Carrier,   // real waveform X cos(w_d t + phi) + beta X' sin(w_d t + phi)
  Baseband,  // complex I/Q envelope X + i beta X'
};

struct DragSpec {
  GaussianShape shape;
  double amplitude = 0.0;    // rad/s
  double drive_phase = 0.0;  // rad
  double beta = 0.0;
  double drive_freq = 0.0;  // rad/s, carrier mode only
  /// The derivative X' is taken per `derivative_unit` seconds so that beta is dimensionless.
  double derivative_unit = 1e-9;
};

/// Central-difference time derivative with one-sided second-order stencils at the ends.
SampledWaveform time_derivative(const SampledWaveform& env);

/// Adds the derivative quadrature to a real envelope.
/// Carrier mode requires at least 8 samples per carrier period.
SampledWaveform apply_drag(const SampledWaveform& env, const DragSpec& spec, DragMode mode = DragMode::Baseband);

/// Chirps a pulse against a quadratic ac Stark shift:
/// a_c(t) = a_p(t) exp(-i int_0^t C_ch |a_p(t')/scale|^2 dt').
/// The phase integral is accumulated with the trapezoidal rule from the first sample.
SampledWaveform apply_chirp(const SampledWaveform& pulse, double chirp_coeff, double amplitude_scale = 1.0);

/// Quadratic Stark-shift law: C_ch |amplitude|^2 (rad/s).
double stark_shift_model(double amplitude, double chirp_coeff);

struct CouplingPulseSpec {
  double width = 550e-9;
  double peak_geff = 2.0 * std::numbers::pi * 1.3e6;  // rad/s
  double chirp_coeff = 0.0;                           // rad/s per unit normalized amplitude squared
  double phase_offset = 0.74 * std::numbers::pi;      // applied to the second pulse of a pair
};

/// Chirped raised-cosine f0-g1 coupling pulse g_eff(t) in rad/s, starting at `start`.
/// The chirp uses the envelope normalized to unit peak.
SampledWaveform coupling_pulse(const CouplingPulseSpec& spec, const TimeGrid& grid, double start, double phase = 0.0);

enum class Channel { Control, Coupling, JpaPump };

enum class PulseKind {
  PrepGe,       // arbitrary rotation on g-e preparing the transmon qubit
  PiEf,         // pi pulse on e-f
  PiGe,         // pi pulse on g-e
  CouplingEarly,
  CouplingLate,
  JpaEarly,
  JpaLate,
};

std::string to_string(PulseKind kind);
Channel channel_of(PulseKind kind);

struct PulsePlacement {
  PulseKind kind;
  double start = 0.0;
  double duration = 0.0;
};

/// Ordered pulse layout of one time-bin generation run.
struct SequenceSpec {
  std::vector<PulsePlacement> pulses;
  double bin_separation = 950e-9;  // start of early coupling pulse to start of late one
  double dt = 0.05e-9;
  CouplingPulseSpec coupling;
  DragSpec control_ge;
  DragSpec control_ef;
  double jpa_phase_early = 0.0;
  double jpa_phase_late = 0.0;
};

/// Transmon preparation rotation R(theta, phi) on g-e before the transfer.
struct PrepAngles {
  double theta = 0.0;
  double phi = 0.0;
};

/// Standard layout: prep, pi_ef, pi_ge, early coupling pulse at t = 0, a pi_ef swap
/// just before the late coupling pulse, and JPA windows over each bin.
SequenceSpec standard_timebin_spec(const CouplingPulseSpec& coupling, double bin_separation,
                                   double control_width = 15e-9, double dt = 0.05e-9);

struct SequenceEvent {
  PulseKind kind;
  double time = 0.0;   // pulse centre for control pulses, window start otherwise
  double phase = 0.0;  // JPA quadrature phase where applicable
};

struct TimebinSequence {
  SampledWaveform coupling;  // g_eff(t), rad/s
  SampledWaveform control;   // baseband DRAG control drive, rad/s
  std::vector<SequenceEvent> events;
  double early_start = 0.0;
  double swap_time = 0.0;  // instant of the ideal e-f swap between the bins
  double end_time = 0.0;
};

/// Synthesizes every channel of the sequence.
/// Throws std::invalid_argument when pulses on the same channel overlap.
TimebinSequence build_timebin_sequence(const SequenceSpec& spec, const PrepAngles& prep);

}  // namespace tbf
