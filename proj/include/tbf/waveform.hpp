#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace tbf {

using cplx = std::complex<double>;

/// Uniform sampling grid: t_k = t0 + k*dt for k in [0, count).
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t count = 1;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double end() const { return time(count - 1); }

  /// Grid covering [start, stop] inclusive with the given spacing.
  static TimeGrid covering(double start, double stop, double dt);

  bool operator==(const TimeGrid&) const = default;
};

/// Complex envelope on a uniform time grid.
///
/// Units depend on role: rad/s for drives and couplings, dimensionless for
/// normalized envelopes, sqrt(1/s) for emitted wave packets.
class SampledWaveform {
public:
  SampledWaveform(double t0, double dt, std::vector<cplx> samples);
  SampledWaveform(const TimeGrid& grid, std::vector<cplx> samples);

  /// All-zero waveform on `grid`.
  static SampledWaveform zeros(const TimeGrid& grid);
  /// Samples `fn` at every grid point.
  static SampledWaveform from_function(const TimeGrid& grid, const std::function<cplx(double)>& fn);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return samples_.size(); }
  TimeGrid grid() const { return {t0_, dt_, samples_.size()}; }
  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
  double end_time() const { return time(samples_.size() - 1); }

  std::span<const cplx> samples() const { return samples_; }
  const cplx& operator[](std::size_t k) const { return samples_[k]; }
  cplx& operator[](std::size_t k) { return samples_[k]; }

  /// Value at arbitrary t: exact on grid points, cubic (Catmull-Rom) in between,
  /// zero outside [t0, end_time].
  cplx at(double t) const;

  /// Trapezoidal integral of |a(t)|^2 over the grid.
  double energy() const;

  bool same_grid(const SampledWaveform& other) const;

  SampledWaveform& operator+=(const SampledWaveform& other);
  SampledWaveform& operator*=(cplx factor);

  /// Pointwise product; grids must match.
  SampledWaveform operator*(const SampledWaveform& other) const;

private:
  void require_same_grid(const SampledWaveform& other) const;

  double t0_;
  double dt_;
  std::vector<cplx> samples_;
};

SampledWaveform operator+(SampledWaveform lhs, const SampledWaveform& rhs);
SampledWaveform operator*(SampledWaveform lhs, cplx factor);
SampledWaveform operator*(cplx factor, SampledWaveform rhs);

/// Trapezoidal integral of real samples spaced by dt.
double trapezoid(std::span<const double> values, double dt);

}  // namespace tbf
