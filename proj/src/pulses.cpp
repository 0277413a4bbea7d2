#include "tbf/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tbf {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kGridSlack = 1e-9;  // relative tolerance when comparing times against grid bounds

bool covers(const TimeGrid& grid, double start, double stop) {
  const double eps = kGridSlack * grid.dt;
  return grid.t0 <= start + eps && grid.end() >= stop - eps;
}
}  // namespace

double GaussianShape::sigma() const {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian width must be positive");
  switch (convention) {
    case GaussianWidth::Sigma:
      return width;
    case GaussianWidth::Fwhm:
      return width / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  }
  return width;
}

SampledWaveform gaussian_envelope(const GaussianShape& shape, double amplitude, const TimeGrid& grid, double center) {
  const double sigma = shape.sigma();
  const double half = shape.half_span();
  if (!covers(grid, center - half, center + half)) {
    throw std::invalid_argument("gaussian envelope truncated: grid does not span the pulse support");
  }
  return SampledWaveform::from_function(grid, [&](double t) -> cplx {
    const double x = t - center;
    if (std::abs(x) > half * (1.0 + 1e-12)) return {};
    return amplitude * std::exp(-0.5 * x * x / (sigma * sigma));
  });
}

SampledWaveform cosine_envelope(double width, double peak, const TimeGrid& grid, double start) {
  if (!(width > 0.0)) throw std::invalid_argument("cosine pulse width must be positive");
  return SampledWaveform::from_function(grid, [&](double t) -> cplx {
    const double x = t - start;
    if (x < 0.0 || x > width) return {};
    return peak * 0.5 * (1.0 - std::cos(2.0 * kPi * x / width));
  });
}

SampledWaveform time_derivative(const SampledWaveform& env) {
  const std::size_t n = env.size();
  const double dt = env.dt();
  std::vector<cplx> d(n);
  if (n == 1) return SampledWaveform(env.grid(), std::move(d));
  if (n == 2) {
    d[0] = d[1] = (env[1] - env[0]) / dt;
    return SampledWaveform(env.grid(), std::move(d));
  }
  d[0] = (-3.0 * env[0] + 4.0 * env[1] - env[2]) / (2.0 * dt);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (env[k + 1] - env[k - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * env[n - 1] - 4.0 * env[n - 2] + env[n - 3]) / (2.0 * dt);
  return SampledWaveform(env.grid(), std::move(d));
}

SampledWaveform apply_drag(const SampledWaveform& env, const DragSpec& spec, DragMode mode) {
  for (const auto& s : env.samples()) {
    if (s.imag() != 0.0) throw std::invalid_argument("DRAG input envelope must be real");
  }
  const SampledWaveform deriv = time_derivative(env);
  std::vector<cplx> out(env.size());
  if (mode == DragMode::Baseband) {
    const cplx rot = std::polar(1.0, spec.drive_phase);
    for (std::size_t k = 0; k < env.size(); ++k) {
      out[k] = rot * cplx{env[k].real(), spec.beta * deriv[k].real() * spec.derivative_unit};
    }
    return SampledWaveform(env.grid(), std::move(out));
  }
  if (!(spec.drive_freq > 0.0)) throw std::invalid_argument("carrier-mode DRAG needs a positive drive frequency");
  const double samples_per_period = 2.0 * kPi / (spec.drive_freq * env.dt());
  if (samples_per_period < 8.0) {
    throw std::invalid_argument("carrier undersampled: fewer than 8 samples per period; use baseband mode");
  }
  for (std::size_t k = 0; k < env.size(); ++k) {
    const double arg = spec.drive_freq * env.time(k) + spec.drive_phase;
    out[k] = env[k].real() * std::cos(arg) + spec.beta * deriv[k].real() * spec.derivative_unit * std::sin(arg);
  }
  return SampledWaveform(env.grid(), std::move(out));
}

SampledWaveform apply_chirp(const SampledWaveform& pulse, double chirp_coeff, double amplitude_scale) {
  if (!(amplitude_scale > 0.0)) throw std::invalid_argument("chirp amplitude scale must be positive");
  std::vector<cplx> out(pulse.size());
  const double inv_scale2 = 1.0 / (amplitude_scale * amplitude_scale);
  double phase = 0.0;
  double prev = std::norm(pulse[0]) * inv_scale2;
  out[0] = pulse[0];
  for (std::size_t k = 1; k < pulse.size(); ++k) {
    const double cur = std::norm(pulse[k]) * inv_scale2;
    phase += 0.5 * (prev + cur) * pulse.dt();
    prev = cur;
    out[k] = pulse[k] * std::polar(1.0, -chirp_coeff * phase);
  }
  return SampledWaveform(pulse.grid(), std::move(out));
}

double stark_shift_model(double amplitude, double chirp_coeff) { return chirp_coeff * amplitude * amplitude; }

SampledWaveform coupling_pulse(const CouplingPulseSpec& spec, const TimeGrid& grid, double start, double phase) {
  if (!(spec.peak_geff >= 0.0)) throw std::invalid_argument("coupling pulse peak must be non-negative");
  SampledWaveform shape = cosine_envelope(spec.width, 1.0, grid, start);
  if (spec.chirp_coeff != 0.0) shape = apply_chirp(shape, spec.chirp_coeff);
  return shape * std::polar(spec.peak_geff, phase);
}

std::string to_string(PulseKind kind) {
  switch (kind) {
    case PulseKind::PrepGe: return "prep_ge";
    case PulseKind::PiEf: return "pi_ef";
    case PulseKind::PiGe: return "pi_ge";
    case PulseKind::CouplingEarly: return "coupling_early";
    case PulseKind::CouplingLate: return "coupling_late";
    case PulseKind::JpaEarly: return "jpa_early";
    case PulseKind::JpaLate: return "jpa_late";
  }
  return "unknown";
}

Channel channel_of(PulseKind kind) {
  switch (kind) {
    case PulseKind::PrepGe:
    case PulseKind::PiEf:
    case PulseKind::PiGe:
      return Channel::Control;
    case PulseKind::CouplingEarly:
    case PulseKind::CouplingLate:
      return Channel::Coupling;
    case PulseKind::JpaEarly:
    case PulseKind::JpaLate:
      return Channel::JpaPump;
  }
  return Channel::Control;
}

SequenceSpec standard_timebin_spec(const CouplingPulseSpec& coupling, double bin_separation, double control_width,
                                   double dt) {
  SequenceSpec spec;
  spec.coupling = coupling;
  spec.bin_separation = bin_separation;
  spec.dt = dt;
  spec.control_ge.shape.width = control_width;
  spec.control_ge.beta = 0.92;
  spec.control_ef.shape.width = control_width;
  spec.control_ef.beta = 1.08;

  const double control = 2.0 * spec.control_ge.shape.half_span();
  const double gap = 5e-9;
  spec.pulses = {
      {PulseKind::PrepGe, -3.0 * (control + gap), control},
      {PulseKind::PiEf, -2.0 * (control + gap), control},
      {PulseKind::PiGe, -(control + gap), control},
      {PulseKind::CouplingEarly, 0.0, coupling.width},
      {PulseKind::PiEf, bin_separation - control - gap, control},
      {PulseKind::CouplingLate, bin_separation, coupling.width},
      {PulseKind::JpaEarly, 0.0, bin_separation},
      {PulseKind::JpaLate, bin_separation, bin_separation},
  };
  return spec;
}

TimebinSequence build_timebin_sequence(const SequenceSpec& spec, const PrepAngles& prep) {
  if (spec.pulses.empty()) throw std::invalid_argument("sequence has no pulses");

  // Same-channel overlap check.
  for (std::size_t i = 0; i < spec.pulses.size(); ++i) {
    const auto& a = spec.pulses[i];
    if (!(a.duration > 0.0)) throw std::invalid_argument("pulse duration must be positive: " + to_string(a.kind));
    for (std::size_t j = i + 1; j < spec.pulses.size(); ++j) {
      const auto& b = spec.pulses[j];
      if (channel_of(a.kind) != channel_of(b.kind)) continue;
      const double eps = 1e-15;
      if (a.start < b.start + b.duration - eps && b.start < a.start + a.duration - eps) {
        throw std::invalid_argument("overlapping pulses on the same channel: " + to_string(a.kind) + " and " +
                                    to_string(b.kind));
      }
    }
  }

  const PulsePlacement* early = nullptr;
  const PulsePlacement* late = nullptr;
  for (const auto& p : spec.pulses) {
    if (p.kind == PulseKind::CouplingEarly) early = &p;
    if (p.kind == PulseKind::CouplingLate) late = &p;
  }
  if (early == nullptr || late == nullptr) throw std::invalid_argument("sequence needs early and late coupling pulses");
  if (late->start - early->start < spec.coupling.width) {
    throw std::invalid_argument("bin separation shorter than the coupling pulse: pulses collide");
  }

  // The swap is the e-f pi pulse that sits between the two coupling pulses.
  const PulsePlacement* swap = nullptr;
  for (const auto& p : spec.pulses) {
    if (p.kind == PulseKind::PiEf && p.start >= early->start && p.start < late->start) swap = &p;
  }
  if (swap == nullptr) throw std::invalid_argument("sequence needs a pi_ef swap pulse between the bins");
  if (swap->start < early->start + early->duration) {
    throw std::invalid_argument("swap pulse overlaps the early coupling pulse");
  }

  double t_first = early->start;
  double t_last = late->start + late->duration;
  for (const auto& p : spec.pulses) {
    t_first = std::min(t_first, p.start);
    t_last = std::max(t_last, p.start + p.duration);
  }
  const TimeGrid grid = TimeGrid::covering(t_first, t_last, spec.dt);

  TimebinSequence seq{SampledWaveform::zeros(grid), SampledWaveform::zeros(grid), {}, early->start, 0.0, grid.end()};

  seq.coupling += coupling_pulse(spec.coupling, grid, early->start, 0.0);
  seq.coupling += coupling_pulse(spec.coupling, grid, late->start, spec.coupling.phase_offset);

  auto add_control = [&](const DragSpec& drag, const PulsePlacement& p, double angle, double phase) {
    const double center = p.start + 0.5 * p.duration;
    SampledWaveform unit = gaussian_envelope(drag.shape, 1.0, grid, center);
    double area = 0.0;
    for (const auto& s : unit.samples()) area += s.real();
    area *= grid.dt;
    DragSpec scaled = drag;
    scaled.drive_phase = phase;
    seq.control += apply_drag(unit * cplx{angle / area, 0.0}, scaled, DragMode::Baseband);
    return center;
  };

  for (const auto& p : spec.pulses) {
    switch (p.kind) {
      case PulseKind::PrepGe: {
        const double c = add_control(spec.control_ge, p, prep.theta, prep.phi);
        seq.events.push_back({p.kind, c, prep.phi});
        break;
      }
      case PulseKind::PiGe: {
        const double c = add_control(spec.control_ge, p, kPi, 0.0);
        seq.events.push_back({p.kind, c, 0.0});
        break;
      }
      case PulseKind::PiEf: {
        const double c = add_control(spec.control_ef, p, kPi, 0.0);
        seq.events.push_back({p.kind, c, 0.0});
        if (&p == swap) seq.swap_time = c;
        break;
      }
      case PulseKind::CouplingEarly:
        seq.events.push_back({p.kind, p.start, 0.0});
        break;
      case PulseKind::CouplingLate:
        seq.events.push_back({p.kind, p.start, spec.coupling.phase_offset});
        break;
      case PulseKind::JpaEarly:
        seq.events.push_back({p.kind, p.start, spec.jpa_phase_early});
        break;
      case PulseKind::JpaLate:
        seq.events.push_back({p.kind, p.start, spec.jpa_phase_late});
        break;
    }
  }
  std::stable_sort(seq.events.begin(), seq.events.end(),
                   [](const SequenceEvent& a, const SequenceEvent& b) { return a.time < b.time; });
  return seq;
}

}  // namespace tbf
