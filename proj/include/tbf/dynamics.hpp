#pragma once

#include <array>
#include <optional>
#include <vector>

#include "tbf/pulses.hpp"
#include "tbf/system_params.hpp"
#include "tbf/waveform.hpp"

namespace tbf {

/// Index of each tracked qubit-cavity expectation value C_{vj,wl} = <|vj><wl|>.
/// C_{g1,f0} is not stored: it is conj(C_{f0,g1}).
enum class Coef : std::size_t { g0f0, g0g1, e0f0, e0g1, g0e0, f0f0, g1g1, f0g1, g0g0, e0e0 };

inline constexpr std::size_t kNumCoefs = 10;

struct CoefficientVector {
  std::array<cplx, kNumCoefs> c{};

  cplx& operator[](Coef k) { return c[static_cast<std::size_t>(k)]; }
  const cplx& operator[](Coef k) const { return c[static_cast<std::size_t>(k)]; }

  double p_g0() const { return (*this)[Coef::g0g0].real(); }
  double p_e0() const { return (*this)[Coef::e0e0].real(); }
  double p_f0() const { return (*this)[Coef::f0f0].real(); }
  double p_g1() const { return (*this)[Coef::g1g1].real(); }
  double total_population() const { return p_g0() + p_e0() + p_f0() + p_g1(); }

  CoefficientVector& operator+=(const CoefficientVector& o);
  CoefficientVector& operator*=(double s);
};

CoefficientVector operator+(CoefficientVector a, const CoefficientVector& b);
CoefficientVector operator*(double s, CoefficientVector a);

/// Qubit-cavity state at the start of a generation run: C0|g0> + C1|e0> + C2|f0>.
struct InitialState {
  cplx c0{1.0, 0.0};
  cplx c1{};
  cplx c2{};

  /// Throws std::invalid_argument unless |C0|^2 + |C1|^2 + |C2|^2 = 1 within 1e-10.
  void validate() const;
  /// Outer-product coefficients: C_{vj,wl}(0) = amp(wl) * conj(amp(vj)).
  CoefficientVector coefficients() const;
};

/// Optional drive-induced ac Stark shift of the f0-g1 transition,
/// delta(t) = coeff * |g_eff(t) / reference_geff|^2, entering as -delta on the |f0> level.
struct StarkInjection {
  double coeff = 0.0;          // rad/s
  double reference_geff = 1.0; // rad/s, coupling at unit normalized amplitude
};

/// Frame in which the coefficient equations are stepped.
enum class Frame {
  /// Common rotations i(2 Delta + alpha), i Delta, i(Delta + alpha) removed analytically.
  Interaction,
  /// Equations stepped literally with their fast phase factors; needs dt well below 1 ps.
  Literal,
};

struct DynamicsOptions {
  double dt = 0.1e-9;
  Frame frame = Frame::Interaction;
  std::optional<StarkInjection> stark;
  bool check_invariants = true;
  std::size_t output_stride = 1;  // keep every n-th step in the stored trajectory
};

/// Literal right-hand side of the ten coefficient equations at one instant.
/// `stark_shift` is delta(t) in rad/s (0 when no injection).
CoefficientVector coefficient_derivative(const CoefficientVector& c, cplx g_eff, const SystemParams& p,
                                         double stark_shift = 0.0);

/// Exchanges the e0 and f0 labels in every coefficient (ideal pi_ef pulse).
CoefficientVector apply_ef_swap(const CoefficientVector& c);

/// Trajectories are stored in the interaction frame regardless of the stepping frame,
/// so the emitted amplitude is a slowly varying envelope.
struct DynamicsResult {
  TimeGrid grid;
  std::vector<CoefficientVector> trajectory;
  SampledWaveform f0t = SampledWaveform::zeros({});  // emitted amplitude at the qubit position, sqrt(1/s)
  double p_e0_final = 0; // leftover |e0> population at the last grid point

  const CoefficientVector& final_state() const { return trajectory.back(); }
};

/// Fixed-step classic RK4 over [t_start, t_end]. Throws NumericalError when a population
/// drops below -1e-10 or the tracked total exceeds 1 + 1e-8.
DynamicsResult integrate(const CoefficientVector& initial, const SampledWaveform& g_eff, const SystemParams& p,
                         double t_start, double t_end, const DynamicsOptions& opts = {});
DynamicsResult integrate(const InitialState& init, const SampledWaveform& g_eff, const SystemParams& p,
                         double t_start, double t_end, const DynamicsOptions& opts = {});

/// f(0, t) = -i sqrt(kappa_ex) C_{g0,g1}(t).
SampledWaveform wavepacket_amplitude(const DynamicsResult& result, double kappa_ex);

/// Two-period run: early bin, ideal e-f swap at `seq.swap_time`, late bin.
DynamicsResult run_timebin_protocol(const InitialState& init, const TimebinSequence& seq, const SystemParams& p,
                                    const DynamicsOptions& opts = {});

struct EfficiencyReport {
  double eta_gen = 0.0;
  double p_e0_sc = 0.0;        // leftover |e0> population per initial |f0> population
  double p_e0_raw = 0.0;       // leftover |e0> population at the window end
  double p_f0_leftover = 0.0;  // untransferred |f0> population at the window end
  double emitted_energy = 0.0; // int |f(0,t)|^2 dt over the window
};

/// Single-bin efficiency with C0 = C2 = 1/sqrt(2), C1 = 0:
/// eta = [1 / (1 - P_e0^sc)] int_0^window |f(0,t)|^2 dt / (|C0|^2 |C2|^2).
EfficiencyReport generation_efficiency(const SystemParams& p, const CouplingPulseSpec& pulse, double window = 0.95e-6,
                                       const DynamicsOptions& opts = {});

/// Scale s such that s^2 int |measured|^2 = int |simulated|^2.
double normalize_measured_trace(const SampledWaveform& measured, const SampledWaveform& simulated);

struct TemporalModes {
  SampledWaveform early;  // unit-norm envelope of the early bin
  SampledWaveform late;   // unit-norm envelope of the late bin
  double early_energy = 0.0;
  double late_energy = 0.0;
  double overlap = 0.0;   // |<early|late>|
};

/// Matched-filter mode functions: f(0,t) split at `split_time`, each part normalized.
/// Throws NumericalError if either bin carries no energy or the overlap exceeds 1e-3.
TemporalModes extract_temporal_modes(const SampledWaveform& f0t, double split_time);

/// Parameters with every decoherence channel switched off (T1, T2 -> infinity, kappa_in = 0).
SystemParams lossless(SystemParams p);

}  // namespace tbf
