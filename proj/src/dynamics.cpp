#include "tbf/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tbf/error.hpp"

namespace tbf {

CoefficientVector& CoefficientVector::operator+=(const CoefficientVector& o) {
  for (std::size_t k = 0; k < kNumCoefs; ++k) c[k] += o.c[k];
  return *this;
}

CoefficientVector& CoefficientVector::operator*=(double s) {
  for (auto& v : c) v *= s;
  return *this;
}

CoefficientVector operator+(CoefficientVector a, const CoefficientVector& b) { return a += b; }
CoefficientVector operator*(double s, CoefficientVector a) { return a *= s; }

void InitialState::validate() const {
  const double norm = std::norm(c0) + std::norm(c1) + std::norm(c2);
  if (std::abs(norm - 1.0) > 1e-10) {
    throw std::invalid_argument("initial state is not normalized: |C0|^2 + |C1|^2 + |C2|^2 = " +
                                std::to_string(norm));
  }
}

CoefficientVector InitialState::coefficients() const {
  validate();
  CoefficientVector v;
  v[Coef::g0f0] = c2 * std::conj(c0);
  v[Coef::e0f0] = c2 * std::conj(c1);
  v[Coef::g0e0] = c1 * std::conj(c0);
  v[Coef::f0f0] = std::norm(c2);
  v[Coef::e0e0] = std::norm(c1);
  v[Coef::g0g0] = std::norm(c0);
  return v;
}

namespace {

constexpr cplx kI{0.0, 1.0};

/// Rotation rates that the interaction frame removes from each coherence.
struct FrameRates {
  double g0f0 = 0.0;  // 2 Delta + alpha, shared with g0g1
  double e0f0 = 0.0;  // Delta, shared with e0g1
  double g0e0 = 0.0;  // Delta + alpha
};

FrameRates frame_rates(const SystemParams& p) {
  const double delta = derive_params(p).delta;
  return {2.0 * delta + p.alpha, delta, delta + p.alpha};
}

double inv(double t) { return std::isinf(t) ? 0.0 : 1.0 / t; }

/// Shared body of the coefficient equations. `rot` holds the i*omega phase factors
/// (zero in the interaction frame) and `feed` the residual phase on the e0f0 -> g0e0 decay term.
CoefficientVector equations(const CoefficientVector& c, cplx g, const SystemParams& p, double stark,
                            const FrameRates& rot, cplx feed) {
  const double kappa = p.kappa_ex + p.kappa_in;
  const double g1ge = inv(p.t1_ge), g1ef = inv(p.t1_ef);
  const double g2ge = inv(p.t2_ge), g2ef = inv(p.t2_ef);
  const cplx gc = std::conj(g);
  const cplx c_g1f0 = std::conj(c[Coef::f0g1]);

  CoefficientVector d;
  d[Coef::g0f0] = (kI * (rot.g0f0 + stark) - g2ef) * c[Coef::g0f0] - kI * g * c[Coef::g0g1];
  d[Coef::g0g1] = (kI * rot.g0f0 - kappa / 2.0) * c[Coef::g0g1] - kI * gc * c[Coef::g0f0];
  d[Coef::e0f0] = (kI * (rot.e0f0 + stark) - (g2ge + g2ef)) * c[Coef::e0f0] - kI * g * c[Coef::e0g1];
  d[Coef::e0g1] = (kI * rot.e0f0 - (kappa / 2.0 + g2ge)) * c[Coef::e0g1] - kI * gc * c[Coef::e0f0];
  d[Coef::g0e0] = (kI * rot.g0e0 - g2ge) * c[Coef::g0e0] + std::sqrt(g1ge * g1ef) * feed * c[Coef::e0f0];
  d[Coef::f0f0] = kI * gc * c_g1f0 - kI * g * c[Coef::f0g1] - g1ef * c[Coef::f0f0];
  d[Coef::g1g1] = kI * g * c[Coef::f0g1] - kI * gc * c_g1f0 - kappa * c[Coef::g1g1];
  d[Coef::f0g1] = kI * gc * (c[Coef::g1g1] - c[Coef::f0f0]) - (kappa / 2.0 + g2ef + kI * stark) * c[Coef::f0g1];
  d[Coef::g0g0] = kappa * c[Coef::g1g1] + g1ge * c[Coef::e0e0];
  d[Coef::e0e0] = -g1ge * c[Coef::e0e0] + g1ef * c[Coef::f0f0];
  return d;
}

CoefficientVector rotate(const CoefficientVector& c, const FrameRates& r, double t, double sign) {
  CoefficientVector out = c;
  const cplx a = std::polar(1.0, sign * r.g0f0 * t);
  const cplx b = std::polar(1.0, sign * r.e0f0 * t);
  const cplx e = std::polar(1.0, sign * r.g0e0 * t);
  out[Coef::g0f0] *= a;
  out[Coef::g0g1] *= a;
  out[Coef::e0f0] *= b;
  out[Coef::e0g1] *= b;
  out[Coef::g0e0] *= e;
  return out;
}

CoefficientVector to_literal(const CoefficientVector& c, const FrameRates& r, double t) { return rotate(c, r, t, +1.0); }
CoefficientVector to_interaction(const CoefficientVector& c, const FrameRates& r, double t) {
  return rotate(c, r, t, -1.0);
}

void check_state(const CoefficientVector& c, double t) {
  const double tol_neg = -1e-10;
  bool bad = c.p_g0() < tol_neg || c.p_e0() < tol_neg || c.p_f0() < tol_neg || c.p_g1() < tol_neg ||
             c.total_population() > 1.0 + 1e-8;
  for (const auto& v : c.c) bad = bad || !std::isfinite(v.real()) || !std::isfinite(v.imag());
  if (bad) {
    std::ostringstream msg;
    msg << "integration unstable at t = " << t << " s: populations (g0, e0, f0, g1) = (" << c.p_g0() << ", "
        << c.p_e0() << ", " << c.p_f0() << ", " << c.p_g1() << "); reduce dt";
    throw NumericalError(msg.str());
  }
}

}  // namespace

CoefficientVector coefficient_derivative(const CoefficientVector& c, cplx g_eff, const SystemParams& p,
                                         double stark_shift) {
  return equations(c, g_eff, p, stark_shift, frame_rates(p), cplx{1.0, 0.0});
}

CoefficientVector apply_ef_swap(const CoefficientVector& c) {
  CoefficientVector s = c;
  s[Coef::e0e0] = c[Coef::f0f0];
  s[Coef::f0f0] = c[Coef::e0e0];
  s[Coef::g0e0] = c[Coef::g0f0];
  s[Coef::g0f0] = c[Coef::g0e0];
  s[Coef::e0g1] = c[Coef::f0g1];
  s[Coef::f0g1] = c[Coef::e0g1];
  s[Coef::e0f0] = std::conj(c[Coef::e0f0]);
  return s;
}

DynamicsResult integrate(const CoefficientVector& initial, const SampledWaveform& g_eff, const SystemParams& p,
                         double t_start, double t_end, const DynamicsOptions& opts) {
  if (!(opts.dt > 0.0)) throw std::invalid_argument("integration step must be positive");
  if (opts.output_stride == 0) throw std::invalid_argument("output stride must be at least 1");
  const TimeGrid steps = TimeGrid::covering(t_start, t_end, opts.dt);
  const std::size_t n_steps = steps.count - 1;
  const FrameRates rates = frame_rates(p);
  const bool literal = opts.frame == Frame::Literal;
  const FrameRates zero{};

  auto stark_at = [&](cplx g) -> double {
    if (!opts.stark) return 0.0;
    const double ref = opts.stark->reference_geff;
    return opts.stark->coeff * std::norm(g) / (ref * ref);
  };
  auto rhs = [&](const CoefficientVector& c, double t) {
    const cplx g = g_eff.at(t);
    if (literal) return equations(c, g, p, stark_at(g), rates, cplx{1.0, 0.0});
    return equations(c, g, p, stark_at(g), zero, std::polar(1.0, -p.alpha * t));
  };

  DynamicsResult result{TimeGrid{t_start, opts.dt * static_cast<double>(opts.output_stride), n_steps / opts.output_stride + 1},
                        {},
                        SampledWaveform::zeros({t_start, opts.dt, 1}),
                        0.0};
  result.trajectory.reserve(result.grid.count);

  // Stepping variable lives in the chosen frame; storage is always the interaction frame.
  CoefficientVector y = literal ? to_literal(initial, rates, t_start) : initial;
  result.trajectory.push_back(initial);
  const double h = opts.dt;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = steps.time(k);
    const CoefficientVector k1 = rhs(y, t);
    const CoefficientVector k2 = rhs(y + (0.5 * h) * k1, t + 0.5 * h);
    const CoefficientVector k3 = rhs(y + (0.5 * h) * k2, t + 0.5 * h);
    const CoefficientVector k4 = rhs(y + h * k3, t + h);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (opts.check_invariants) check_state(y, t + h);
    if ((k + 1) % opts.output_stride == 0) {
      result.trajectory.push_back(literal ? to_interaction(y, rates, steps.time(k + 1)) : y);
    }
  }
  result.p_e0_final = result.trajectory.back().p_e0();
  result.f0t = wavepacket_amplitude(result, p.kappa_ex);
  return result;
}

DynamicsResult integrate(const InitialState& init, const SampledWaveform& g_eff, const SystemParams& p,
                         double t_start, double t_end, const DynamicsOptions& opts) {
  return integrate(init.coefficients(), g_eff, p, t_start, t_end, opts);
}

SampledWaveform wavepacket_amplitude(const DynamicsResult& result, double kappa_ex) {
  const cplx factor = -kI * std::sqrt(kappa_ex);
  std::vector<cplx> f(result.trajectory.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = factor * result.trajectory[k][Coef::g0g1];
  return SampledWaveform(result.grid.t0, result.grid.dt, std::move(f));
}

DynamicsResult run_timebin_protocol(const InitialState& init, const TimebinSequence& seq, const SystemParams& p,
                                    const DynamicsOptions& opts) {
  if (!(seq.swap_time > seq.early_start && seq.end_time > seq.swap_time)) {
    throw std::invalid_argument("sequence needs early_start < swap_time < end_time");
  }
  DynamicsResult first = integrate(init, seq.coupling, p, seq.early_start, seq.swap_time, opts);
  const double t_swap = first.grid.end();
  const FrameRates rates = frame_rates(p);
  const CoefficientVector swapped =
      to_interaction(apply_ef_swap(to_literal(first.final_state(), rates, t_swap)), rates, t_swap);
  DynamicsResult second = integrate(swapped, seq.coupling, p, t_swap, seq.end_time, opts);

  DynamicsResult out;
  out.trajectory = std::move(first.trajectory);
  out.trajectory.insert(out.trajectory.end(), second.trajectory.begin() + 1, second.trajectory.end());
  out.grid = TimeGrid{first.grid.t0, first.grid.dt, out.trajectory.size()};
  out.p_e0_final = out.trajectory.back().p_e0();
  out.f0t = wavepacket_amplitude(out, p.kappa_ex);
  return out;
}

EfficiencyReport generation_efficiency(const SystemParams& p, const CouplingPulseSpec& pulse, double window,
                                       const DynamicsOptions& opts) {
  const InitialState init{cplx{1.0 / std::sqrt(2.0), 0.0}, cplx{}, cplx{1.0 / std::sqrt(2.0), 0.0}};
  const TimeGrid grid = TimeGrid::covering(0.0, window, 0.5 * opts.dt);
  const SampledWaveform g = coupling_pulse(pulse, grid, 0.0);
  const DynamicsResult run = integrate(init, g, p, 0.0, window, opts);

  const double c0 = std::norm(init.c0), c2 = std::norm(init.c2);
  EfficiencyReport r;
  r.emitted_energy = run.f0t.energy();
  r.p_e0_raw = run.final_state().p_e0();
  r.p_f0_leftover = run.final_state().p_f0();
  r.p_e0_sc = r.p_e0_raw / c2;
  if (r.p_e0_sc >= 1.0) throw NumericalError("leftover |e0> population reached the initial |f0> population");
  r.eta_gen = r.emitted_energy / (c0 * c2) / (1.0 - r.p_e0_sc);
  return r;
}

double normalize_measured_trace(const SampledWaveform& measured, const SampledWaveform& simulated) {
  if (!measured.same_grid(simulated)) throw std::invalid_argument("traces must share the same grid");
  const double em = measured.energy();
  if (!(em > 0.0)) throw std::invalid_argument("measured trace has zero energy");
  return std::sqrt(simulated.energy() / em);
}

TemporalModes extract_temporal_modes(const SampledWaveform& f0t, double split_time) {
  std::vector<cplx> early(f0t.size()), late(f0t.size());
  for (std::size_t k = 0; k < f0t.size(); ++k) {
    (f0t.time(k) < split_time ? early : late)[k] = f0t[k];
  }
  TemporalModes m{SampledWaveform(f0t.grid(), std::move(early)), SampledWaveform(f0t.grid(), std::move(late)), 0, 0,
                  0};
  m.early_energy = m.early.energy();
  m.late_energy = m.late.energy();
  if (!(m.early_energy > 0.0) || !(m.late_energy > 0.0)) {
    throw NumericalError("temporal mode extraction: a bin carries no emitted energy");
  }
  m.early *= cplx{1.0 / std::sqrt(m.early_energy), 0.0};
  m.late *= cplx{1.0 / std::sqrt(m.late_energy), 0.0};
  cplx overlap{};
  for (std::size_t k = 0; k < f0t.size(); ++k) overlap += std::conj(m.early[k]) * m.late[k];
  m.overlap = std::abs(overlap * f0t.dt());
  if (m.overlap > 1e-3) throw NumericalError("temporal modes are not orthogonal");
  return m;
}

SystemParams lossless(SystemParams p) {
  const double inf = std::numeric_limits<double>::infinity();
  p.t1_ge = p.t2_ge = p.t1_ef = p.t2_ef = inf;
  p.kappa_in = 0.0;
  return p;
}

}  // namespace tbf
