#include "tbf/tomography.hpp"

#include <algorithm>
#include <unsupported/Eigen/KroneckerProduct>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tbf/error.hpp"
#include "tbf/hermite.hpp"

namespace tbf {

namespace {

constexpr double kTwoPiLocal = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Random numbers. The 53-bit mantissa construction keeps draws identical across
// standard libraries, which std::uniform_real_distribution does not promise.

using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)), n - 1);
}

// ---------------------------------------------------------------------------
// Cumulative integrals I_nm(q_k) = int_{-8}^{q_k} psi_n psi_m on a 4096-point table,
// used for inverse-CDF sampling of any state's marginal.

struct CdfTable {
  static constexpr int kPoints = 4096;
  static constexpr double kLimit = 8.0;
  int d = 0;
  int pairs = 0;
  double h = 0.0;
  std::vector<double> values;  // [k * pairs + pair]

  static int pair_index(int n, int m, int d) { return n * d - n * (n - 1) / 2 + (m - n); }  // n <= m

  double q(int k) const { return -kLimit + h * k; }
};

const CdfTable& cdf_table(int cutoff) {
  static std::mutex mutex;
  static std::map<int, CdfTable> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(cutoff);
  if (it != cache.end()) return it->second;

  CdfTable t;
  t.d = cutoff + 1;
  t.pairs = t.d * (t.d + 1) / 2;
  t.h = 2.0 * CdfTable::kLimit / (CdfTable::kPoints - 1);
  t.values.assign(static_cast<std::size_t>(CdfTable::kPoints) * t.pairs, 0.0);
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  std::vector<double> psi;
  for (int k = 1; k < CdfTable::kPoints; ++k) {
    const double a = t.q(k - 1), b = t.q(k);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::vector<double> cell(t.pairs, 0.0);
    // Symmetric Gauss-Legendre rule: abscissa x and -x share a weight.
    auto add = [&](double x, double w) {
      hermite_functions(mid + half * x, cutoff, psi);
      for (int n = 0; n < t.d; ++n)
        for (int m = n; m < t.d; ++m) cell[CdfTable::pair_index(n, m, t.d)] += w * half * psi[n] * psi[m];
    };
    const auto& xs = Gauss::abscissa();
    const auto& ws = Gauss::weights();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] == 0.0) {
        add(0.0, ws[i]);
      } else {
        add(xs[i], ws[i]);
        add(-xs[i], ws[i]);
      }
    }
    for (int p = 0; p < t.pairs; ++p) {
      t.values[static_cast<std::size_t>(k) * t.pairs + p] = t.values[static_cast<std::size_t>(k - 1) * t.pairs + p] + cell[p];
    }
  }
  return cache.emplace(cutoff, std::move(t)).first->second;
}

/// Pair weights so that P(q) = sum_pairs w * psi_n psi_m for the state `c` measured at phase phi.
void marginal_weights(const CMatrix& c, double phi, std::vector<double>& w) {
  const int d = static_cast<int>(c.rows());
  w.assign(d * (d + 1) / 2, 0.0);
  for (int n = 0; n < d; ++n) {
    w[CdfTable::pair_index(n, n, d)] = c(n, n).real();
    for (int m = n + 1; m < d; ++m) {
      w[CdfTable::pair_index(n, m, d)] = 2.0 * (c(n, m) * std::polar(1.0, (m - n) * phi)).real();
    }
  }
}

double draw_quadrature(const CdfTable& t, const std::vector<double>& w, Rng& rng) {
  auto cdf = [&](int k) {
    const double* row = &t.values[static_cast<std::size_t>(k) * t.pairs];
    double s = 0.0;
    for (int p = 0; p < t.pairs; ++p) s += w[p] * row[p];
    return s;
  };
  const double total = cdf(CdfTable::kPoints - 1);
  if (!(total > 0.0)) throw NumericalError("quadrature distribution has no weight");
  const double target = uniform01(rng) * total;
  int lo = 0, hi = CdfTable::kPoints - 1;  // cdf(lo) <= target < cdf(hi) up to monotonicity
  double c_lo = cdf(lo), c_hi = total;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    const double c_mid = cdf(mid);
    if (c_mid <= target) {
      lo = mid;
      c_lo = c_mid;
    } else {
      hi = mid;
      c_hi = c_mid;
    }
  }
  const double span = c_hi - c_lo;
  const double frac = span > 0.0 ? std::clamp((target - c_lo) / span, 0.0, 1.0) : 0.5;
  return t.q(lo) + frac * t.h;
}

double sum_vector(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

// ---------------------------------------------------------------------------

int Binning::index(double q) const {
  if (q < -q_max) return 0;
  if (q >= q_max) return count() - 1;
  const int b = 1 + static_cast<int>(std::floor((q + q_max) / width()));
  return std::clamp(b, 1, inner_bins);
}

double Binning::lower(int bin) const {
  if (bin <= 0) return -std::numeric_limits<double>::infinity();
  return -q_max + (bin - 1) * width();
}

double Binning::upper(int bin) const {
  if (bin >= count() - 1) return std::numeric_limits<double>::infinity();
  return -q_max + bin * width();
}

std::vector<double> uniform_phases(int count) {
  if (count < 1) throw std::invalid_argument("at least one phase is required");
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = kTwoPiLocal * k / count;
  return out;
}

std::size_t MeasurementSettings::setting_count() const {
  std::size_t n = 1;
  for (int m = 0; m < modes; ++m) n *= phases.size();
  return n;
}

std::array<double, 2> MeasurementSettings::setting_phases(std::size_t s) const {
  if (modes == 1) return {phases.at(s), 0.0};
  const std::size_t p = phases.size();
  return {phases.at(s / p), phases.at(s % p)};
}

QuadratureDataset sample_quadratures(const FockDensityMatrix& state, const MeasurementSettings& settings,
                                     const std::string& description) {
  if (!(settings.eta_meas > 0.0 && settings.eta_meas <= 1.0)) {
    throw std::invalid_argument("measurement efficiency must lie in (0, 1]");
  }
  if (state.modes() != settings.modes) throw std::invalid_argument("state and settings disagree on the mode count");
  if (state.modes() > 2) throw std::invalid_argument("sampling supports one or two modes");
  if (settings.samples_per_setting < 1) throw std::invalid_argument("samples per setting must be positive");
  for (double phi : settings.phases) {
    if (!(phi >= 0.0 && phi < kTwoPiLocal)) throw std::invalid_argument("phases must lie in [0, 2 pi)");
  }

  const FockDensityMatrix lossy = loss_channel(state, settings.eta_meas);
  const CdfTable& table = cdf_table(state.cutoff());
  const int d = state.mode_dim();
  const CMatrix& rho = lossy.matrix();
  const CMatrix rho_e = state.modes() == 2 ? reduced_state(lossy, 0).matrix() : rho;

  QuadratureDataset data;
  data.modes = state.modes();
  data.seed = settings.seed;
  data.state = description;
  data.eta_meas = settings.eta_meas;
  const std::size_t n_settings = settings.setting_count();
  data.phases.resize(n_settings);
  data.shots.resize(n_settings);

  std::vector<double> w, w_late, psi;
  CMatrix cond(d, d);
  for (std::size_t s = 0; s < n_settings; ++s) {
    Rng rng = make_rng(settings.seed, s);
    const auto phases = settings.setting_phases(s);
    data.phases[s] = phases;
    auto& shots = data.shots[s];
    shots.resize(settings.samples_per_setting);
    if (!settings.per_shot_drift) marginal_weights(rho_e, phases[0], w);
    for (auto& shot : shots) {
      double theta = 0.0;
      if (settings.per_shot_drift) {
        theta = kTwoPiLocal * uniform01(rng);
        marginal_weights(rho_e, phases[0] + theta, w);
      }
      shot[0] = draw_quadrature(table, w, rng);
      shot[1] = 0.0;
      if (data.modes == 1) continue;

      // Late-bin state conditioned on the early outcome.
      hermite_functions(shot[0], state.cutoff(), psi);
      const double phi_e = phases[0] + theta;
      for (int m = 0; m < d; ++m) {
        for (int m2 = 0; m2 < d; ++m2) {
          cplx acc = 0.0;
          for (int n = 0; n < d; ++n) {
            for (int n2 = 0; n2 < d; ++n2) {
              acc += psi[n] * psi[n2] * std::polar(1.0, (n2 - n) * phi_e) * rho(n * d + m, n2 * d + m2);
            }
          }
          cond(m, m2) = acc;
        }
      }
      marginal_weights(cond, phases[1] + theta, w_late);
      shot[1] = draw_quadrature(table, w_late, rng);
    }
  }
  return data;
}

// ---------------------------------------------------------------------------

std::size_t PovmSet::setting_count() const {
  std::size_t n = 1;
  for (int m = 0; m < modes; ++m) n *= phases.size();
  return n;
}

CMatrix PovmSet::element(std::size_t phase_index, int bin) const {
  const double phi = phases.at(phase_index);
  const Eigen::MatrixXd& b = bin_integrals.at(bin);
  CMatrix out(b.rows(), b.cols());
  for (Eigen::Index n = 0; n < b.rows(); ++n) {
    for (Eigen::Index m = 0; m < b.cols(); ++m) out(n, m) = b(n, m) * std::polar(1.0, static_cast<double>(n - m) * phi);
  }
  return out;
}

CMatrix PovmSet::element_for_setting(std::size_t setting, std::size_t joint_bin) const {
  if (modes == 1) return element(setting, static_cast<int>(joint_bin));
  const std::size_t p = phases.size();
  const int nb = bins.count();
  const CMatrix e = element(setting / p, static_cast<int>(joint_bin / nb));
  const CMatrix l = element(setting % p, static_cast<int>(joint_bin % nb));
  return Eigen::kroneckerProduct(e, l);
}

double PovmSet::completeness_residual() const {
  double worst = 0.0;
  const int d = cutoff + 1;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    CMatrix sum = CMatrix::Zero(d, d);
    for (int b = 0; b < bins.count(); ++b) sum += element(k, b);
    worst = std::max(worst, (sum - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff());
  }
  return worst;
}

PovmSet build_povm(const MeasurementSettings& settings, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("cutoff must be at least 1");
  PovmSet povm;
  povm.modes = settings.modes;
  povm.cutoff = cutoff;
  povm.bins = settings.bins;
  povm.phases = settings.phases;
  const int d = cutoff + 1;
  const int nb = settings.bins.count();
  povm.bin_integrals.assign(nb, Eigen::MatrixXd::Zero(d, d));

  for (int n = 0; n < d; ++n) {
    for (int m = n; m < d; ++m) {
      auto f = [&](double q) {
        const auto psi = hermite_functions(q, cutoff);
        return psi[n] * psi[m];
      };
      for (int b = 1; b < nb - 1; ++b) {
        const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
            f, settings.bins.lower(b), settings.bins.upper(b), 15, 1e-14);
        povm.bin_integrals[b](n, m) = povm.bin_integrals[b](m, n) = v;
      }
      // Upper tail directly; the lower tail follows from psi_n(-q) = (-1)^n psi_n(q).
      boost::math::quadrature::exp_sinh<double> tail;
      const double q_max = settings.bins.q_max;
      const double upper = tail.integrate([&](double x) { return f(q_max + x); }, 1e-14);
      const double lower = ((n + m) % 2 == 0 ? 1.0 : -1.0) * upper;
      povm.bin_integrals[nb - 1](n, m) = povm.bin_integrals[nb - 1](m, n) = upper;
      povm.bin_integrals[0](n, m) = povm.bin_integrals[0](m, n) = lower;
    }
  }
  return povm;
}

BinnedCounts bin_counts(const QuadratureDataset& data, const Binning& bins) {
  BinnedCounts out;
  out.modes = data.modes;
  out.bins = bins.count();
  const std::size_t row = data.modes == 1 ? bins.count() : static_cast<std::size_t>(bins.count()) * bins.count();
  out.counts.assign(data.shots.size(), std::vector<double>(row, 0.0));
  for (std::size_t s = 0; s < data.shots.size(); ++s) {
    for (const auto& shot : data.shots[s]) {
      std::size_t j = bins.index(shot[0]);
      if (data.modes == 2) j = j * bins.count() + bins.index(shot[1]);
      out.counts[s][j] += 1.0;
    }
    out.total += static_cast<double>(data.shots[s].size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Maximum likelihood.

namespace {

/// Flattened POVM element table and the nonzero-count structure of the data.
class LikelihoodModel {
public:
  LikelihoodModel(const BinnedCounts& counts, const PovmSet& povm, double floor)
      : modes_(povm.modes), d_(povm.cutoff + 1), nb_(povm.bins.count()), floor_(floor), total_(counts.total) {
    if (counts.modes != povm.modes) throw std::invalid_argument("counts and POVM disagree on the mode count");
    if (counts.bins != povm.bins.count()) throw std::invalid_argument("counts and POVM use different binnings");
    if (counts.counts.size() != povm.setting_count()) throw std::invalid_argument("counts and POVM settings differ");
    if (!(total_ > 0.0)) throw std::invalid_argument("no counts to reconstruct from");
    if (modes_ > 2) throw std::invalid_argument("reconstruction supports one or two modes");
    for (const auto& row : counts.counts) {
      for (double f : row) {
        if (f < 0.0) throw std::invalid_argument("bin counts must be non-negative");
      }
    }

    const std::size_t dd = static_cast<std::size_t>(d_) * d_;
    elements_.resize(povm.phases.size() * nb_ * dd);
    for (std::size_t k = 0; k < povm.phases.size(); ++k) {
      for (int b = 0; b < nb_; ++b) {
        const CMatrix e = povm.element(k, b);
        cplx* dst = &elements_[(k * nb_ + b) * dd];
        for (int n = 0; n < d_; ++n)
          for (int m = 0; m < d_; ++m) dst[n * d_ + m] = e(n, m);
      }
    }

    // Packed upper triangles (n <= m) for the two-mode contraction; both the late element and
    // the partial trace z are Hermitian, so tr(L z) only needs half the entries.
    packed_size_ = static_cast<std::size_t>(d_) * (d_ + 1) / 2;
    if (modes_ == 2) {
      packed_.resize(povm.phases.size() * nb_ * packed_size_);
      for (std::size_t k = 0; k < povm.phases.size(); ++k) {
        for (int b = 0; b < nb_; ++b) {
          const cplx* src = &elements_[(k * nb_ + b) * dd];
          cplx* dst = &packed_[(k * nb_ + b) * packed_size_];
          for (int n = 0; n < d_; ++n)
            for (int m = n; m < d_; ++m) *dst++ = src[n * d_ + m];
        }
      }
    }

    const std::size_t p = povm.phases.size();
    if (modes_ == 2) groups_.resize(p * nb_);
    for (std::size_t s = 0; s < counts.counts.size(); ++s) {
      const auto& row = counts.counts[s];
      if (modes_ == 1) {
        Row r{s, {}};
        for (int b = 0; b < nb_; ++b)
          if (row[b] > 0.0) r.cells.push_back({b, row[b]});
        if (!r.cells.empty()) rows_.push_back(std::move(r));
      } else {
        // Rows sharing the early phase and early bin share the partial trace over the early mode.
        for (int be = 0; be < nb_; ++be) {
          Row r{s % p, {}};
          for (int bl = 0; bl < nb_; ++bl) {
            const double f = row[static_cast<std::size_t>(be) * nb_ + bl];
            if (f > 0.0) r.cells.push_back({bl, f});
          }
          if (!r.cells.empty()) groups_[(s / p) * nb_ + be].push_back(std::move(r));
        }
      }
    }
  }

  Eigen::Index dim() const { return modes_ == 1 ? d_ : d_ * d_; }
  double total() const { return total_; }

  /// Per-sample log-likelihood of rho; fills R / N and the number of floored bins.
  double evaluate(const CMatrix& rho, CMatrix& r, std::size_t& floored) const {
    r.setZero(dim(), dim());
    floored = 0;
    double ll = 0.0;
    const std::size_t dd = static_cast<std::size_t>(d_) * d_;
    if (modes_ == 1) {
      for (const auto& row : rows_) {
        for (const auto& cell : row.cells) {
          const cplx* e = &elements_[(row.phase * nb_ + cell.bin) * dd];
          double p = 0.0;
          for (int n = 0; n < d_; ++n)
            for (int m = 0; m < d_; ++m) p += (e[n * d_ + m] * rho(m, n)).real();
          if (p < floor_) {
            p = floor_;
            ++floored;
          }
          ll += cell.count * std::log(p);
          const double wgt = cell.count / p;
          for (int n = 0; n < d_; ++n)
            for (int m = 0; m < d_; ++m) r(n, m) += wgt * e[n * d_ + m];
        }
      }
    } else {
      const std::size_t ps = packed_size_;
      std::vector<cplx> z(dd), zp(ps), wp(ps), w(dd);
      std::vector<double> coef(ps);
      for (int n = 0, k = 0; n < d_; ++n)
        for (int m = n; m < d_; ++m, ++k) coef[k] = n == m ? 1.0 : 2.0;
      // Products of unit-count probabilities are folded into a mantissa/exponent pair so that
      // only one log is taken per group.
      double mantissa = 1.0;
      long exponent = 0;
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g].empty()) continue;
        const cplx* e = &elements_[g * dd];
        // z = tr_E[(Pi_E (x) I) rho], laid out so that p = tr(Pi_L z).
        for (int m = 0; m < d_; ++m) {
          for (int m2 = m; m2 < d_; ++m2) {
            cplx acc = 0.0;
            for (int n = 0; n < d_; ++n)
              for (int n2 = 0; n2 < d_; ++n2) acc += e[n * d_ + n2] * rho(n2 * d_ + m, n * d_ + m2);
            z[m * d_ + m2] = acc;
          }
        }
        for (int m = 0, k = 0; m < d_; ++m)
          for (int m2 = m; m2 < d_; ++m2, ++k) zp[k] = coef[k] * std::conj(z[m * d_ + m2]);
        std::fill(wp.begin(), wp.end(), cplx{});
        for (const auto& row : groups_[g]) {
          const cplx* lbase = &packed_[row.phase * nb_ * ps];
          for (const auto& cell : row.cells) {
            const cplx* l = lbase + static_cast<std::size_t>(cell.bin) * ps;
            double p = 0.0;
            for (std::size_t k = 0; k < ps; ++k) p += l[k].real() * zp[k].real() - l[k].imag() * zp[k].imag();
            if (p < floor_) {
              p = floor_;
              ++floored;
            }
            if (cell.count == 1.0) {
              mantissa *= p;
              if (mantissa < 1e-280) {
                int ex = 0;
                mantissa = std::frexp(mantissa, &ex);
                exponent += ex;
              }
            } else {
              ll += cell.count * std::log(p);
            }
            const double wgt = cell.count / p;
            for (std::size_t k = 0; k < ps; ++k) wp[k] += wgt * l[k];
          }
        }
        for (int m = 0, k = 0; m < d_; ++m)
          for (int m2 = m; m2 < d_; ++m2, ++k) {
            w[m * d_ + m2] = wp[k];
            w[m2 * d_ + m] = std::conj(wp[k]);
          }
        for (int n = 0; n < d_; ++n)
          for (int n2 = 0; n2 < d_; ++n2) {
            const cplx en = e[n * d_ + n2];
            for (int m = 0; m < d_; ++m)
              for (int m2 = 0; m2 < d_; ++m2) r(n * d_ + m, n2 * d_ + m2) += en * w[m * d_ + m2];
          }
      }
      ll += std::log(mantissa) + static_cast<double>(exponent) * std::numbers::ln2;
    }
    r /= total_;
    return ll / total_;
  }

private:
  struct Cell {
    int bin;
    double count;
  };
  struct Row {
    std::size_t phase;  // the only phase for one mode, the late phase for two
    std::vector<Cell> cells;
  };

  int modes_;
  int d_;
  int nb_;
  double floor_;
  double total_;
  std::vector<cplx> elements_;
  std::vector<cplx> packed_;
  std::size_t packed_size_ = 0;
  std::vector<Row> rows_;                 // one mode
  std::vector<std::vector<Row>> groups_;  // two modes, indexed by early phase * bins + early bin
};

CMatrix normalized(const CMatrix& m) {
  CMatrix h = 0.5 * (m + m.adjoint());
  return h / h.trace().real();
}

}  // namespace

MleResult mle_reconstruct(const BinnedCounts& counts, const PovmSet& povm, const MleConfig& config) {
  const LikelihoodModel model(counts, povm, config.probability_floor);
  const Eigen::Index dim = model.dim();
  CMatrix rho = config.initial ? normalized(*config.initial) : CMatrix(CMatrix::Identity(dim, dim) / double(dim));
  if (rho.rows() != dim) throw std::invalid_argument("initial state has the wrong dimension");

  MleResult result{FockDensityMatrix(povm.modes, povm.cutoff, rho), 0, 0.0, {}, 0, 0, false};
  CMatrix r(dim, dim), r_next(dim, dim);
  std::size_t floored = 0, floored_next = 0;
  double ll = model.evaluate(rho, r, floored);
  result.loglik_trace.push_back(ll);
  const CMatrix identity = CMatrix::Identity(dim, dim);

  for (int it = 1; it <= config.max_iterations; ++it) {
    const int diluted_before = result.diluted_steps;
    CMatrix candidate = normalized(r * rho * r);
    double ll_next = model.evaluate(candidate, r_next, floored_next);
    if (ll_next < ll - config.monotonicity_tolerance) {
      ++result.diluted_steps;
      double eps = 0.5;
      for (int halving = 0;; ++halving) {
        if (halving > 60) throw NumericalError("maximum-likelihood step could not increase the likelihood");
        const CMatrix a = identity + eps * r;
        candidate = normalized(a * rho * a.adjoint());
        ll_next = model.evaluate(candidate, r_next, floored_next);
        if (ll_next >= ll - config.monotonicity_tolerance) break;
        eps *= 0.5;
      }
    }
    // Stronger steps N[R^t rho R^t] for t = 2, 4, ... while the likelihood keeps rising. Every
    // trial stays positive, and plain R rho R crawls once the estimate is close to rank deficient.
    if (config.extrapolate && result.diluted_steps == diluted_before) {
      const Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (r + r.adjoint()));
      const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
      CMatrix r_try(dim, dim);
      std::size_t floored_try = 0;
      for (double t = 2.0; t <= config.max_extrapolation; t *= 2.0) {
        const CMatrix rt = eig.eigenvectors() * lambda.array().pow(t).matrix().asDiagonal() * eig.eigenvectors().adjoint();
        CMatrix trial = normalized(rt * rho * rt);
        const double ll_try = model.evaluate(trial, r_try, floored_try);
        if (!(ll_try > ll_next)) break;
        candidate = std::move(trial);
        ll_next = ll_try;
        r_next.swap(r_try);
        floored_next = floored_try;
      }
    }
    FockDensityMatrix(povm.modes, povm.cutoff, candidate).check_invariants();
    const double gain = ll_next - ll;
    rho = std::move(candidate);
    r.swap(r_next);
    floored = floored_next;
    ll = ll_next;
    result.loglik_trace.push_back(ll);
    result.iterations = it;
    if (gain < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.rho = FockDensityMatrix(povm.modes, povm.cutoff, rho);
  result.loglik = ll;
  result.floored_bins = floored;
  return result;
}

// ---------------------------------------------------------------------------

namespace {

BootstrapResult summarize(std::vector<double> estimate, std::vector<std::vector<double>> replicates) {
  BootstrapResult out;
  out.resamples = static_cast<int>(replicates.size());
  out.estimate = std::move(estimate);
  const std::size_t k = out.estimate.size();
  out.mean.assign(k, 0.0);
  out.sd.assign(k, 0.0);
  for (const auto& rep : replicates) {
    if (rep.size() != k) throw std::invalid_argument("estimator returned a different number of quantities");
    for (std::size_t i = 0; i < k; ++i) out.mean[i] += rep[i];
  }
  for (auto& m : out.mean) m /= static_cast<double>(replicates.size());
  for (const auto& rep : replicates)
    for (std::size_t i = 0; i < k; ++i) out.sd[i] += (rep[i] - out.mean[i]) * (rep[i] - out.mean[i]);
  for (auto& s : out.sd) s = std::sqrt(s / static_cast<double>(replicates.size() - 1));
  out.lo3.resize(k);
  out.hi3.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.lo3[i] = out.mean[i] - 3.0 * out.sd[i];
    out.hi3[i] = out.mean[i] + 3.0 * out.sd[i];
  }
  out.replicates = std::move(replicates);
  return out;
}

}  // namespace

BootstrapResult bootstrap(const QuadratureDataset& data, const DatasetEstimator& estimator, int resamples,
                          std::uint64_t seed) {
  if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  std::vector<double> estimate = estimator(data);
  std::vector<std::vector<double>> reps;
  reps.reserve(resamples);
  QuadratureDataset copy = data;
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t s = 0; s < data.shots.size(); ++s) {
      Rng rng = make_rng(seed, static_cast<std::uint64_t>(r) + 1, s);
      const auto& src = data.shots[s];
      auto& dst = copy.shots[s];
      for (auto& shot : dst) shot = src[uniform_index(rng, src.size())];
    }
    reps.push_back(estimator(copy));
  }
  return summarize(std::move(estimate), std::move(reps));
}

BootstrapResult bootstrap(const std::vector<double>& samples, const SampleEstimator& estimator, int resamples,
                          std::uint64_t seed) {
  if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  if (samples.empty()) throw std::invalid_argument("bootstrap needs data");
  std::vector<double> estimate = estimator(samples);
  std::vector<std::vector<double>> reps;
  reps.reserve(resamples);
  std::vector<double> copy(samples.size());
  for (int r = 0; r < resamples; ++r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r) + 1);
    for (auto& x : copy) x = samples[uniform_index(rng, samples.size())];
    reps.push_back(estimator(copy));
  }
  return summarize(std::move(estimate), std::move(reps));
}

// ---------------------------------------------------------------------------

namespace {

struct MixtureFit {
  std::vector<double> p;
  int iterations = 0;
};

MixtureFit em_fit(const std::vector<double>& hist, const std::vector<std::vector<double>>& diag) {
  const std::size_t k = diag.size();
  const double n = sum_vector(hist);
  MixtureFit fit{std::vector<double>(k, 1.0 / k), 0};
  std::vector<double> next(k);
  for (int it = 1; it <= 20000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t b = 0; b < hist.size(); ++b) {
      if (hist[b] == 0.0) continue;
      double model = 0.0;
      for (std::size_t j = 0; j < k; ++j) model += fit.p[j] * diag[j][b];
      if (model <= 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) next[j] += hist[b] * fit.p[j] * diag[j][b] / model;
    }
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      next[j] /= n;
      change = std::max(change, std::abs(next[j] - fit.p[j]));
    }
    fit.p.swap(next);
    fit.iterations = it;
    if (change < 1e-12) break;
  }
  return fit;
}

}  // namespace

MarginalFit fit_marginal_photon_populations(const std::vector<double>& samples, int max_n, const Binning& bins,
                                            int resamples, std::uint64_t seed) {
  if (samples.size() < 1000) throw std::invalid_argument("marginal fit needs at least 1000 samples");
  if (max_n < 0) throw std::invalid_argument("max_n must be non-negative");
  MeasurementSettings settings;
  settings.phases = {0.0};
  settings.bins = bins;
  const PovmSet povm = build_povm(settings, std::max(max_n, 1));
  std::vector<std::vector<double>> diag(max_n + 1, std::vector<double>(bins.count()));
  for (int n = 0; n <= max_n; ++n)
    for (int b = 0; b < bins.count(); ++b) diag[n][b] = povm.bin_integrals[b](n, n);

  auto histogram = [&](const std::vector<double>& xs) {
    std::vector<double> h(bins.count(), 0.0);
    for (double x : xs) h[bins.index(x)] += 1.0;
    return h;
  };
  const auto hist = histogram(samples);
  if (std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0.0; }) < 2) {
    throw std::invalid_argument("degenerate histogram: all samples fall in one bin");
  }

  const MixtureFit full = em_fit(hist, diag);
  MarginalFit out;
  out.populations = full.p;
  out.iterations = full.iterations;
  out.ci_low = out.ci_high = full.p;
  if (resamples >= 2) {
    const BootstrapResult boot =
        bootstrap(samples, [&](const std::vector<double>& xs) { return em_fit(histogram(xs), diag).p; }, resamples, seed);
    for (int n = 0; n <= max_n; ++n) {
      std::vector<double> col;
      col.reserve(boot.replicates.size());
      for (const auto& rep : boot.replicates) col.push_back(rep[n]);
      std::sort(col.begin(), col.end());
      auto pick = [&](double q) {
        const double pos = q * static_cast<double>(col.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return i + 1 < col.size() ? col[i] * (1.0 - frac) + col[i + 1] * frac : col[i];
      };
      out.ci_low[n] = pick(0.025);
      out.ci_high[n] = pick(0.975);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& cardinal_labels() {
  static const std::vector<std::string> labels{"0", "1", "+", "-", "+i", "-i"};
  return labels;
}

Eigen::Vector2cd cardinal_amplitudes(const std::string& label) {
  const double h = 1.0 / std::sqrt(2.0);
  const cplx i{0.0, 1.0};
  if (label == "0") return {1.0, 0.0};
  if (label == "1") return {0.0, 1.0};
  if (label == "+") return {h, h};
  if (label == "-") return {h, -h};
  if (label == "+i") return {h, i * h};
  if (label == "-i") return {h, -i * h};
  throw std::invalid_argument("unknown cardinal state '" + label + "'");
}

namespace {

CVector encoded_amplitudes(QubitKind kind, const Eigen::Vector2cd& qubit, int cutoff) {
  switch (kind) {
    case QubitKind::SingleRail:
      return single_rail_amplitudes(qubit(0), qubit(1), cutoff);
    case QubitKind::TimeBin:
      return time_bin_amplitudes(qubit(0), qubit(1), cutoff);
    case QubitKind::TransmonSim:
      return single_rail_amplitudes(qubit(0), qubit(1), 1);
  }
  throw std::invalid_argument("unknown qubit kind");
}

int modes_of(QubitKind kind) { return kind == QubitKind::TimeBin ? 2 : 1; }

}  // namespace

FockDensityMatrix encode_qubit(QubitKind kind, const Eigen::Vector2cd& qubit, int cutoff) {
  const int c = kind == QubitKind::TransmonSim ? 1 : cutoff;
  return pure_state(encoded_amplitudes(kind, qubit, c), modes_of(kind), c);
}

TomographyRun run_tomography(const FockDensityMatrix& ideal, const CVector& target, const ChannelStack& channels,
                             const TomographyOptions& options) {
  if (ideal.cutoff() != options.cutoff) throw std::invalid_argument("state cutoff must match the reconstruction cutoff");
  if (target.size() != ideal.dim()) throw std::invalid_argument("fidelity target dimension mismatch");
  if (options.loss_correct && ideal.modes() != 2) {
    throw std::invalid_argument("loss correction needs a two-mode (time-bin) state");
  }
  Eigen::Vector2cd qubit_target;
  if (options.loss_correct) {
    qubit_target << target(ideal.index({0, 1})), target(ideal.index({1, 0}));
    const double norm = qubit_target.norm();
    if (!(norm > 0.0)) throw std::invalid_argument("target has no single-photon component");
    qubit_target /= norm;
  }

  MeasurementSettings settings = options.settings;
  settings.modes = ideal.modes();
  settings.per_shot_drift = channels.per_shot_drift;
  const FockDensityMatrix prepared = channels.eta < 1.0 ? loss_channel(ideal, channels.eta) : ideal;
  const PovmSet povm = build_povm(settings, options.cutoff);

  TomographyRun run;
  run.data = sample_quadratures(prepared, settings);
  auto score = [&](const FockDensityMatrix& rho) {
    if (options.loss_correct) return qubit_fidelity(project_single_photon_subspace(rho), qubit_target);
    return fidelity(rho, target);
  };

  run.mle = mle_reconstruct(bin_counts(*run.data, settings.bins), povm, options.mle);
  run.rho = run.mle->rho;
  if (options.loss_correct) run.projected = project_single_photon_subspace(*run.rho);
  run.fidelity = score(*run.rho);

  if (options.bootstrap > 0) {
    MleConfig warm = options.mle;
    warm.initial = run.rho->matrix();
    const DatasetEstimator estimator = [&](const QuadratureDataset& d) -> std::vector<double> {
      if (&d == &*run.data) return {run.fidelity};  // the full-data call; already reconstructed above
      return {score(mle_reconstruct(bin_counts(d, settings.bins), povm, warm).rho)};
    };
    run.fidelity_bootstrap = bootstrap(*run.data, estimator, options.bootstrap, settings.seed ^ 0x9e3779b97f4a7c15ULL);
  }
  return run;
}

TomographyRun run_transmon_readout(const Eigen::Vector2cd& qubit, const ChannelStack& channels,
                                   const TomographyOptions& options) {
  FockDensityMatrix state = encode_qubit(QubitKind::TransmonSim, qubit, 1);
  if (channels.eta < 1.0) state = loss_channel(state, channels.eta);
  if (channels.per_shot_drift) state = phase_drift_channel(state, {0});

  Eigen::Matrix2cd pauli[3];
  pauli[0] << 0, 1, 1, 0;
  pauli[1] << 0, cplx(0, -1), cplx(0, 1), 0;
  pauli[2] << 1, 0, 0, -1;
  const int n = options.settings.samples_per_setting;
  if (n < 1) throw std::invalid_argument("samples per setting must be positive");
  const Eigen::Matrix2cd rho = state.matrix();
  const Eigen::Vector2cd target = qubit.normalized();
  const Eigen::Matrix2cd target_rho = target * target.adjoint();

  // Per axis: shot outcomes +1 / -1 drawn from the exact expectation value.
  std::vector<std::vector<double>> outcomes(3, std::vector<double>(n));
  for (int axis = 0; axis < 3; ++axis) {
    const double p_plus = 0.5 * (1.0 + (pauli[axis] * rho).trace().real());
    Rng rng = make_rng(options.settings.seed, axis);
    for (auto& o : outcomes[axis]) o = uniform01(rng) < p_plus ? 1.0 : -1.0;
  }
  auto estimate = [&](const std::vector<std::vector<double>>& shots) {
    Eigen::Vector3d r;
    for (int axis = 0; axis < 3; ++axis) r(axis) = sum_vector(shots[axis]) / static_cast<double>(shots[axis].size());
    if (r.norm() > 1.0) r /= r.norm();
    Eigen::Matrix2cd est = 0.5 * Eigen::Matrix2cd::Identity();
    for (int axis = 0; axis < 3; ++axis) est += 0.5 * r(axis) * pauli[axis];
    return est;
  };
  auto score = [&](const Eigen::Matrix2cd& est) { return (est * target_rho).trace().real(); };

  TomographyRun run;
  run.projected = estimate(outcomes);
  run.fidelity = score(*run.projected);
  if (options.bootstrap > 0) {
    if (options.bootstrap < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
    std::vector<std::vector<double>> reps;
    auto copy = outcomes;
    for (int r = 0; r < options.bootstrap; ++r) {
      for (int axis = 0; axis < 3; ++axis) {
        Rng rng = make_rng(options.settings.seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(r) + 1, axis);
        for (auto& o : copy[axis]) o = outcomes[axis][uniform_index(rng, outcomes[axis].size())];
      }
      reps.push_back({score(estimate(copy))});
    }
    run.fidelity_bootstrap = summarize({run.fidelity}, std::move(reps));
  }
  return run;
}

CardinalSuite cardinal_state_suite(QubitKind kind, const ChannelStack& channels, const TomographyOptions& options) {
  CardinalSuite suite;
  double var = 0.0;
  const auto& labels = cardinal_labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    TomographyOptions opts = options;
    opts.settings.seed = options.settings.seed + 7919ULL * (i + 1);
    const Eigen::Vector2cd qubit = cardinal_amplitudes(labels[i]);
    TomographyRun run;
    if (kind == QubitKind::TransmonSim) {
      run = run_transmon_readout(qubit, channels, opts);
    } else {
      const CVector target = encoded_amplitudes(kind, qubit, opts.cutoff);
      run = run_tomography(pure_state(target, modes_of(kind), opts.cutoff), target, channels, opts);
    }
    const double sd = run.fidelity_bootstrap.sd.empty() ? 0.0 : run.fidelity_bootstrap.sd[0];
    suite.rows.push_back({labels[i], run.fidelity, sd});
    suite.average += run.fidelity;
    var += sd * sd;
  }
  suite.average /= static_cast<double>(labels.size());
  suite.average_sd = std::sqrt(var) / static_cast<double>(labels.size());
  return suite;
}

}  // namespace tbf
