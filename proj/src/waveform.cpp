#include "tbf/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tbf {

TimeGrid TimeGrid::covering(double start, double stop, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time grid spacing must be positive");
  if (stop < start) throw std::invalid_argument("time grid stop precedes start");
  const double steps = (stop - start) / dt;
  auto n = static_cast<std::size_t>(std::llround(std::ceil(steps - 1e-9)));
  return {start, dt, n + 1};
}

SampledWaveform::SampledWaveform(double t0, double dt, std::vector<cplx> samples)
    : t0_(t0), dt_(dt), samples_(std::move(samples)) {
  if (!(dt_ > 0.0)) throw std::invalid_argument("waveform dt must be positive");
  if (samples_.empty()) throw std::invalid_argument("waveform needs at least one sample");
}

SampledWaveform::SampledWaveform(const TimeGrid& grid, std::vector<cplx> samples)
    : SampledWaveform(grid.t0, grid.dt, std::move(samples)) {
  if (samples_.size() != grid.count) throw std::invalid_argument("sample count does not match grid");
}

SampledWaveform SampledWaveform::zeros(const TimeGrid& grid) {
  return SampledWaveform(grid, std::vector<cplx>(grid.count, cplx{}));
}

SampledWaveform SampledWaveform::from_function(const TimeGrid& grid, const std::function<cplx(double)>& fn) {
  std::vector<cplx> s(grid.count);
  for (std::size_t k = 0; k < grid.count; ++k) s[k] = fn(grid.time(k));
  return SampledWaveform(grid, std::move(s));
}

cplx SampledWaveform::at(double t) const {
  const double x = (t - t0_) / dt_;
  const auto n = static_cast<long long>(samples_.size());
  if (x < -1e-9 || x > static_cast<double>(n - 1) + 1e-9) return {};
  const double nearest = std::round(x);
  if (std::abs(x - nearest) < 1e-9) {
    return samples_[static_cast<std::size_t>(std::clamp<long long>(static_cast<long long>(nearest), 0, n - 1))];
  }
  const auto k = static_cast<long long>(std::floor(x));
  const double u = x - static_cast<double>(k);
  auto sample = [&](long long i) -> cplx {
    return (i < 0 || i >= n) ? cplx{} : samples_[static_cast<std::size_t>(i)];
  };
  const cplx p0 = sample(k - 1), p1 = sample(k), p2 = sample(k + 1), p3 = sample(k + 2);
  // Catmull-Rom
  const double u2 = u * u, u3 = u2 * u;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
}

double SampledWaveform::energy() const {
  std::vector<double> mag2(samples_.size());
  for (std::size_t k = 0; k < samples_.size(); ++k) mag2[k] = std::norm(samples_[k]);
  return trapezoid(mag2, dt_);
}

bool SampledWaveform::same_grid(const SampledWaveform& other) const {
  return samples_.size() == other.samples_.size() && std::abs(t0_ - other.t0_) <= 1e-12 * std::max(1.0, dt_) &&
         std::abs(dt_ - other.dt_) <= 1e-12 * dt_;
}

void SampledWaveform::require_same_grid(const SampledWaveform& other) const {
  if (!same_grid(other)) throw std::invalid_argument("waveform arithmetic requires identical (t0, dt, length)");
}

SampledWaveform& SampledWaveform::operator+=(const SampledWaveform& other) {
  require_same_grid(other);
  for (std::size_t k = 0; k < samples_.size(); ++k) samples_[k] += other.samples_[k];
  return *this;
}

SampledWaveform& SampledWaveform::operator*=(cplx factor) {
  for (auto& s : samples_) s *= factor;
  return *this;
}

SampledWaveform SampledWaveform::operator*(const SampledWaveform& other) const {
  require_same_grid(other);
  SampledWaveform out = *this;
  for (std::size_t k = 0; k < samples_.size(); ++k) out.samples_[k] *= other.samples_[k];
  return out;
}

SampledWaveform operator+(SampledWaveform lhs, const SampledWaveform& rhs) { return lhs += rhs; }
SampledWaveform operator*(SampledWaveform lhs, cplx factor) { return lhs *= factor; }
SampledWaveform operator*(cplx factor, SampledWaveform rhs) { return rhs *= factor; }

double trapezoid(std::span<const double> values, double dt) {
  if (values.size() < 2) return 0.0;
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k + 1 < values.size(); ++k) sum += values[k];
  return sum * dt;
}

}  // namespace tbf
