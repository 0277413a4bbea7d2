#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "tbf/pulses.hpp"
#include "tbf/system_params.hpp"

using namespace tbf;

TEST_SUITE("pulse-synthesis") {

TEST_CASE("gaussian envelope: peak, one-sigma value, zero amplitude, truncation") {
  const GaussianShape shape{15e-9};
  const TimeGrid grid{0.0, 0.5e-9, 201};  // 0 .. 100 ns, centre at 50 ns
  const SampledWaveform g = gaussian_envelope(shape, 1.0, grid, 50e-9);
  CHECK(g[100].real() == doctest::Approx(1.0));
  CHECK(g[130].real() == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(g[70].real() == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(g[0] == cplx{});  // beyond 3 sigma

  const SampledWaveform zero = gaussian_envelope(shape, 0.0, grid, 50e-9);
  for (const auto& s : zero.samples()) CHECK(s == cplx{});

  CHECK_THROWS_AS(gaussian_envelope(shape, 1.0, grid, 20e-9), std::invalid_argument);

  const GaussianShape fwhm{15e-9, GaussianWidth::Fwhm};
  CHECK(fwhm.sigma() == doctest::Approx(15e-9 / 2.3548200450309493));
}

TEST_CASE("raised cosine: endpoints, peak at w/2, mean peak/2") {
  const double w = 400e-9;
  const TimeGrid grid{0.0, 1e-9, 401};
  const SampledWaveform c = cosine_envelope(w, 3.0, grid);
  CHECK(std::abs(c[0]) == doctest::Approx(0.0));
  CHECK(std::abs(c[400]) < 1e-14);
  CHECK(c[200].real() == doctest::Approx(3.0));
  double sum = 0.0;
  for (std::size_t k = 0; k < 400; ++k) sum += c[k].real();  // rectangle rule is exact for a full period
  CHECK(sum / 400.0 == doctest::Approx(1.5).epsilon(1e-12));

  const TimeGrid wide{-50e-9, 1e-9, 501};
  const SampledWaveform shifted = cosine_envelope(w, 1.0, wide, 0.0);
  CHECK(shifted[10] == cplx{});
}

TEST_CASE("DRAG: beta 0 carrier is X cos, centre sample, derivative quadrature vs analytic derivative") {
  const GaussianShape shape{15e-9};
  const double dt = 0.01e-9;
  const TimeGrid grid = TimeGrid::covering(0.0, 100e-9, dt);
  const double centre = grid.time(grid.count / 2);
  const double amp = 2 * M_PI * 20e6;
  const SampledWaveform x = gaussian_envelope(shape, amp, grid, centre);

  DragSpec plain{shape, amp, 0.3, 0.0, 2 * M_PI * 1e9};
  const SampledWaveform a0 = apply_drag(x, plain, DragMode::Carrier);
  for (std::size_t k = 0; k < grid.count; k += 97) {
    CHECK(a0[k].real() == doctest::Approx(x[k].real() * std::cos(plain.drive_freq * grid.time(k) + 0.3)));
  }

  DragSpec ge = plain;
  ge.beta = 0.92;
  const SampledWaveform a1 = apply_drag(x, ge, DragMode::Carrier);
  const std::size_t c = grid.count / 2;
  CHECK(a1[c].real() == doctest::Approx(amp * std::cos(ge.drive_freq * centre + 0.3)).epsilon(1e-9));

  // Baseband e-f pulse: imaginary part is beta * dX/dt (per ns), checked against the analytic derivative.
  DragSpec ef{shape, amp, 0.0, 1.08};
  const SampledWaveform b = apply_drag(x, ef, DragMode::Baseband);
  const double sigma = shape.sigma();
  double worst = 0.0;
  for (std::size_t k = 5; k + 5 < grid.count; ++k) {
    const double t = grid.time(k) - centre;
    if (std::abs(t) > 2.9 * sigma) continue;
    const double dx = -t / (sigma * sigma) * amp * std::exp(-0.5 * t * t / (sigma * sigma));
    worst = std::max(worst, std::abs(b[k].imag() - 1.08 * dx * 1e-9));
    CHECK(b[k].real() == doctest::Approx(x[k].real()));
  }
  CHECK(worst < 1e-6 * amp);

  // beta = 0 baseband leaves the magnitude untouched.
  const SampledWaveform id = apply_drag(x, DragSpec{shape, amp}, DragMode::Baseband);
  for (std::size_t k = 0; k < grid.count; k += 53) CHECK(std::abs(id[k]) == doctest::Approx(std::abs(x[k])));

  DragSpec coarse = plain;
  coarse.drive_freq = 2 * M_PI * 20e9;  // 5 samples per period at 0.01 ns
  CHECK_THROWS_AS(apply_drag(x, coarse, DragMode::Carrier), std::invalid_argument);
}

TEST_CASE("chirp: zero coefficient, constant magnitude, cosine phase vs Gauss-Kronrod") {
  const TimeGrid grid{0.0, 0.1e-9, 5501};
  const double w = 550e-9;
  const SampledWaveform env = cosine_envelope(w, 1.0, grid);

  const SampledWaveform same = apply_chirp(env, 0.0);
  for (std::size_t k = 0; k < grid.count; ++k) CHECK(same[k] == env[k]);

  const double cch = 2 * M_PI * 1.66e6;
  const SampledWaveform flat = apply_chirp(
      SampledWaveform::from_function(grid, [](double) { return cplx{0.8, 0.0}; }), cch);
  CHECK(std::remainder(std::arg(flat[grid.count - 1]) + cch * 0.64 * grid.end(), 2 * M_PI) ==
        doctest::Approx(0.0).epsilon(1e-9));

  const SampledWaveform chirped = apply_chirp(env, cch);
  double max_dev = 0.0;
  for (std::size_t k = 0; k < grid.count; ++k) max_dev = std::max(max_dev, std::abs(std::abs(chirped[k]) - std::abs(env[k])));
  CHECK(max_dev < 1e-15);

  auto integrand = [w](double t) {
    const double a = 0.5 * (1.0 - std::cos(2 * M_PI * t / w));
    return a * a;
  };
  // The envelope vanishes at t = w, so read the phase at 400 ns where it is well defined.
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 400e-9, 15, 1e-14);
  const double phase = std::arg(chirped[4000] / env[4000]);
  CHECK(std::abs(std::remainder(phase + cch * oracle, 2 * M_PI)) < 1e-6);
}

TEST_CASE("quadratic Stark law") {
  const double c = 2 * M_PI * -2.15e6;
  CHECK(stark_shift_model(0.0, c) == 0.0);
  CHECK(angular_to_hz(stark_shift_model(1.0, c)) == doctest::Approx(-2.15e6));
  CHECK(stark_shift_model(0.6, c) * 4.0 == doctest::Approx(stark_shift_model(1.2, c)));
}

TEST_CASE("pulse energy is grid convergent") {
  CouplingPulseSpec spec;
  spec.chirp_coeff = 2 * M_PI * -1.66e6;
  const double e1 = coupling_pulse(spec, TimeGrid::covering(0.0, 600e-9, 0.2e-9), 0.0).energy();
  const double e2 = coupling_pulse(spec, TimeGrid::covering(0.0, 600e-9, 0.1e-9), 0.0).energy();
  CHECK(std::abs(e1 - e2) / e2 < 1e-4);
  CHECK(e2 == doctest::Approx(spec.peak_geff * spec.peak_geff * 3.0 * spec.width / 8.0).epsilon(1e-6));
}

TEST_CASE("time-bin sequence: late pulse is the early one rotated by the offset, collisions rejected") {
  CouplingPulseSpec coupling;
  coupling.chirp_coeff = 2 * M_PI * -1.66e6;
  coupling.phase_offset = 0.74 * M_PI;
  const SequenceSpec spec = standard_timebin_spec(coupling, 950e-9, 15e-9, 0.05e-9);
  const TimebinSequence seq = build_timebin_sequence(spec, {M_PI / 2, 0.0});

  const std::size_t i0 = static_cast<std::size_t>(std::llround((0.0 - seq.coupling.t0()) / seq.coupling.dt()));
  const std::size_t shift = static_cast<std::size_t>(std::llround(950e-9 / seq.coupling.dt()));
  const cplx rot = std::polar(1.0, 0.74 * M_PI);
  double worst = 0.0;
  for (std::size_t k = 0; k * seq.coupling.dt() <= coupling.width; k += 7) {
    worst = std::max(worst, std::abs(seq.coupling[i0 + shift + k] - rot * seq.coupling[i0 + k]));
  }
  CHECK(worst < 1e-9 * coupling.peak_geff);
  CHECK(seq.swap_time > 550e-9);
  CHECK(seq.swap_time < 950e-9);
  CHECK(seq.early_start == doctest::Approx(0.0));

  int swaps = 0, jpa = 0;
  for (const auto& e : seq.events) {
    swaps += e.kind == PulseKind::PiEf;
    jpa += e.kind == PulseKind::JpaEarly || e.kind == PulseKind::JpaLate;
  }
  CHECK(swaps == 2);
  CHECK(jpa == 2);

  CHECK_THROWS_AS(build_timebin_sequence(standard_timebin_spec(coupling, 500e-9), {}), std::invalid_argument);
}

}  // TEST_SUITE
