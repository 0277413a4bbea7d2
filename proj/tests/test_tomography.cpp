#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>

#include "tbf/error.hpp"
#include "tbf/tomography.hpp"

using namespace tbf;

namespace {

const double kH = 1 / std::sqrt(2.0);

CMatrix random_state(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  CMatrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = {n(rng), n(rng)};
  CMatrix rho = a * a.adjoint();
  return rho / rho.trace();
}

MeasurementSettings settings(int modes, int samples, std::uint64_t seed, double eta = 1.0) {
  MeasurementSettings s;
  s.modes = modes;
  s.samples_per_setting = samples;
  s.seed = seed;
  s.eta_meas = eta;
  return s;
}

/// Probability mass of the exact marginal inside a bin, by adaptive quadrature.
double bin_mass(const FockDensityMatrix& rho, double phi, const Binning& b, int bin) {
  auto f = [&](double q) { return quadrature_marginal(rho, phi, q); };
  using boost::math::quadrature::gauss_kronrod;
  if (bin == 0) {
    return boost::math::quadrature::exp_sinh<double>().integrate([&](double x) { return f(-b.q_max - x); }, 0.0,
                                                                 std::numeric_limits<double>::infinity());
  }
  if (bin == b.count() - 1) {
    return boost::math::quadrature::exp_sinh<double>().integrate([&](double x) { return f(b.q_max + x); }, 0.0,
                                                                 std::numeric_limits<double>::infinity());
  }
  return gauss_kronrod<double, 31>::integrate(f, b.lower(bin), b.upper(bin), 10, 1e-13);
}

/// Kolmogorov-Smirnov distance of the samples against the single-photon quadrature law.
double ks_single_photon(std::vector<double> q) {
  std::sort(q.begin(), q.end());
  auto cdf = [](double x) { return 0.5 + 0.5 * std::erf(x) - x * std::exp(-x * x) / std::sqrt(M_PI); };
  double d = 0.0;
  const double n = static_cast<double>(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double c = cdf(q[i]);
    d = std::max({d, std::abs(c - i / n), std::abs((i + 1) / n - c)});
  }
  return d;
}

std::vector<double> column(const QuadratureDataset& d, std::size_t setting, int mode) {
  std::vector<double> out;
  for (const auto& s : d.shots[setting]) out.push_back(s[mode]);
  return out;
}

double covariance(const std::vector<std::array<double, 2>>& shots) {
  double me = 0, ml = 0, c = 0;
  for (const auto& s : shots) {
    me += s[0];
    ml += s[1];
  }
  me /= shots.size();
  ml /= shots.size();
  for (const auto& s : shots) c += (s[0] - me) * (s[1] - ml);
  return c / (shots.size() - 1);
}

}  // namespace

TEST_SUITE("tomography") {

TEST_CASE("bins partition the line") {
  const Binning b;
  CHECK(b.count() == 52);
  CHECK(b.index(-1e9) == 0);
  CHECK(b.index(-5.0) == 1);
  CHECK(b.index(4.9999) == 50);
  CHECK(b.index(5.0) == 51);
  CHECK(b.index(0.0) == 26);
  for (int k = 1; k < b.count(); ++k) CHECK(b.lower(k) == b.upper(k - 1));
  CHECK(std::isinf(b.lower(0)));
  CHECK(std::isinf(b.upper(51)));
  const auto phases = uniform_phases(12);
  CHECK(phases.size() == 12);
  CHECK(phases[3] == doctest::Approx(M_PI / 2));
}

TEST_CASE("POVM: completeness, positivity, agreement with the integrated marginal") {
  for (int cutoff : {3, 4, 5}) {
    const PovmSet povm = build_povm(settings(1, 1, 1), cutoff);
    CHECK(povm.completeness_residual() < 1e-12);
  }
  const PovmSet povm = build_povm(settings(1, 1, 1), 3);
  std::mt19937_64 rng(5);
  const FockDensityMatrix rho(1, 3, random_state(4, rng));
  double worst = 0.0;
  for (std::size_t k : {0u, 5u, 11u}) {
    for (int b = 0; b < povm.bins.count(); ++b) {
      const CMatrix e = povm.element(k, b);
      CHECK((e - e.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
      for (int n = 0; n < 4; ++n) CHECK(e(n, n).real() >= 0.0);
      CHECK(Eigen::SelfAdjointEigenSolver<CMatrix>(e).eigenvalues().minCoeff() > -1e-12);
      const double p = (e * rho.matrix()).trace().real();
      worst = std::max(worst, std::abs(p - bin_mass(rho, povm.phases[k], povm.bins, b)));
    }
  }
  CHECK(worst < 1e-8);

  const PovmSet two = build_povm(settings(2, 1, 1), 3);
  CHECK(two.setting_count() == 144);
  const CMatrix joint = two.element_for_setting(12 * 3 + 7, 20 * 52 + 31);
  const CMatrix kron = Eigen::kroneckerProduct(two.element(3, 20), two.element(7, 31)).eval();
  CHECK((joint - kron).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("sampling: vacuum statistics, KS against the single-photon law, correlation sign flip") {
  const FockDensityMatrix vac = pure_state(fock_amplitudes({0}, 3), 1, 3);
  const QuadratureDataset dv = sample_quadratures(vac, settings(1, 10000, 9));
  CHECK(dv.shots.size() == 12);
  for (std::size_t s = 0; s < 12; s += 5) {
    const auto q = column(dv, s, 0);
    CHECK(q.size() == 10000);
    const double mean = std::accumulate(q.begin(), q.end(), 0.0) / q.size();
    double var = 0.0;
    for (double x : q) var += (x - mean) * (x - mean);
    var /= q.size() - 1;
    CHECK(std::abs(mean) < 5 * std::sqrt(0.5 / q.size()));
    CHECK(var == doctest::Approx(0.5).epsilon(0.05));
  }

  const FockDensityMatrix one = pure_state(fock_amplitudes({1}, 3), 1, 3);
  const QuadratureDataset d1 = sample_quadratures(one, settings(1, 10000, 10));
  const double critical = 1.628 / std::sqrt(10000.0);  // 1 % level
  for (std::size_t s : {0u, 4u, 9u}) CHECK(ks_single_photon(column(d1, s, 0)) < critical);

  const FockDensityMatrix tb = pure_state(time_bin_amplitudes(kH, kH, 3), 2, 3);
  MeasurementSettings two = settings(2, 4000, 11);
  const QuadratureDataset d2 = sample_quadratures(tb, two);
  // Setting s = iE * 12 + iL; phase difference 0 and pi.
  const double c_same = covariance(d2.shots[2 * 12 + 2]);
  const double c_opp = covariance(d2.shots[8 * 12 + 2]);
  CHECK(c_same == doctest::Approx(0.5).epsilon(0.1));
  CHECK(c_opp == doctest::Approx(-0.5).epsilon(0.1));

  CHECK_THROWS_AS(sample_quadratures(vac, settings(1, 10, 1, 1.5)), std::invalid_argument);
}

TEST_CASE("sampling and reconstruction are deterministic in the seed") {
  const FockDensityMatrix one = loss_channel(pure_state(fock_amplitudes({1}, 3), 1, 3), 0.7);
  const auto a = sample_quadratures(one, settings(1, 500, 42));
  const auto b = sample_quadratures(one, settings(1, 500, 42));
  const auto c = sample_quadratures(one, settings(1, 500, 43));
  CHECK(a.shots == b.shots);
  CHECK(a.shots != c.shots);
  const PovmSet povm = build_povm(settings(1, 1, 1), 3);
  const auto ra = mle_reconstruct(bin_counts(a, povm.bins), povm);
  const auto rb = mle_reconstruct(bin_counts(b, povm.bins), povm);
  CHECK(ra.rho.matrix() == rb.rho.matrix());
  CHECK(ra.iterations == rb.iterations);

  MeasurementSettings drift = settings(1, 500, 42);
  drift.per_shot_drift = true;
  CHECK(sample_quadratures(one, drift).shots == sample_quadratures(one, drift).shots);
}

TEST_CASE("MLE: vacuum and lossy single-photon round trips, monotone likelihood") {
  const PovmSet povm = build_povm(settings(1, 1, 1), 3);
  const FockDensityMatrix vac = pure_state(fock_amplitudes({0}, 3), 1, 3);
  const auto rv = mle_reconstruct(bin_counts(sample_quadratures(vac, settings(1, 10000, 1)), povm.bins), povm);
  CHECK(fidelity(rv.rho, fock_amplitudes({0}, 3)) >= 0.99);

  const FockDensityMatrix lossy = loss_channel(pure_state(fock_amplitudes({1}, 3), 1, 3), 0.556);
  const auto r1 = mle_reconstruct(bin_counts(sample_quadratures(lossy, settings(1, 10000, 2)), povm.bins), povm);
  CHECK(r1.rho(1, 1).real() == doctest::Approx(0.556).epsilon(0.02 / 0.556));
  CHECK(fidelity(r1.rho, fock_amplitudes({1}, 3)) == doctest::Approx(0.556).epsilon(0.02 / 0.556));
  CHECK(r1.converged);
  for (std::size_t k = 1; k < r1.loglik_trace.size(); ++k) CHECK(r1.loglik_trace[k] >= r1.loglik_trace[k - 1] - 1e-9);
  r1.rho.check_invariants();

  // Without the extrapolated steps the plain iteration also climbs monotonically.
  MleConfig plain;
  plain.extrapolate = false;
  plain.max_iterations = 300;
  const auto rp = mle_reconstruct(bin_counts(sample_quadratures(lossy, settings(1, 2000, 3)), povm.bins), povm, plain);
  for (std::size_t k = 1; k < rp.loglik_trace.size(); ++k) CHECK(rp.loglik_trace[k] >= rp.loglik_trace[k - 1] - 1e-9);

  BinnedCounts empty = bin_counts(sample_quadratures(vac, settings(1, 10, 1)), povm.bins);
  for (auto& row : empty.counts) std::fill(row.begin(), row.end(), 0.0);
  empty.total = 0;
  CHECK_THROWS_AS(mle_reconstruct(empty, povm), std::invalid_argument);
}

TEST_CASE("MLE floors impossible bins and reports them") {
  MeasurementSettings wide = settings(1, 200, 4);
  wide.bins.q_max = 8.0;
  const PovmSet povm = build_povm(wide, 1);
  const FockDensityMatrix vac = pure_state(fock_amplitudes({0}, 1), 1, 1);
  BinnedCounts counts = bin_counts(sample_quadratures(vac, wide), povm.bins);
  // No cutoff-1 state puts more than ~1e-27 beyond q = 8.
  counts.counts[0][51] += 1;
  counts.total += 1;
  MleConfig cfg;
  cfg.max_iterations = 50;
  const auto r = mle_reconstruct(counts, povm, cfg);
  CHECK(r.floored_bins >= 1);
  r.rho.check_invariants();
}

TEST_CASE("two-mode round trip with generation and measurement loss, then projection") {
  TomographyOptions opts;
  opts.settings = settings(2, 1000, 5, 0.67);
  opts.loss_correct = true;
  opts.bootstrap = 0;
  const CVector target = time_bin_amplitudes(kH, kH, 3);
  const TomographyRun run = run_tomography(pure_state(target, 2, 3), target, {0.83, false}, opts);
  CHECK(run.fidelity >= 0.97);
  REQUIRE(run.mle);
  CHECK(run.mle->converged);
  for (std::size_t k = 1; k < run.mle->loglik_trace.size(); ++k)
    CHECK(run.mle->loglik_trace[k] >= run.mle->loglik_trace[k - 1] - 1e-9);
  // Raw fidelity of the lossy reconstruction sits near the overall efficiency.
  CHECK(fidelity(*run.rho, target) == doctest::Approx(0.83 * 0.67).epsilon(0.05));
}

TEST_CASE("loss-corrected fidelity improves with the number of samples") {
  TomographyOptions opts;
  opts.loss_correct = true;
  opts.bootstrap = 0;
  const CVector target = time_bin_amplitudes(cplx(0.6, 0), cplx(0, 0.8), 3);
  // Single datasets fluctuate by more than the gain between neighbouring sizes; average three seeds.
  std::vector<double> infidelity;
  for (int n : {200, 800, 3200}) {
    double sum = 0.0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      opts.settings = settings(2, n, seed, 0.67);
      sum += 1 - run_tomography(pure_state(target, 2, 3), target, {0.83, false}, opts).fidelity;
    }
    infidelity.push_back(sum / 3);
  }
  CHECK(infidelity[1] < infidelity[0]);
  CHECK(infidelity[2] < infidelity[1]);
}

TEST_CASE("marginal photon-number fit") {
  const Binning bins;
  auto draw = [](const FockDensityMatrix& rho, int n, std::uint64_t seed) {
    MeasurementSettings s = settings(1, n / 12, seed);
    const auto d = sample_quadratures(rho, s);
    std::vector<double> q;
    for (const auto& set : d.shots)
      for (const auto& shot : set) q.push_back(shot[0]);
    return q;
  };
  const FockDensityMatrix vac = pure_state(fock_amplitudes({0}, 3), 1, 3);
  CHECK(fit_marginal_photon_populations(draw(vac, 12000, 1), 3, bins, 50, 1).populations[0] >= 0.99);

  const FockDensityMatrix one = loss_channel(pure_state(fock_amplitudes({1}, 3), 1, 3), 0.591);
  const MarginalFit fit = fit_marginal_photon_populations(draw(one, 12000, 2), 2, bins, 100, 2);
  CHECK(fit.populations[1] == doctest::Approx(0.591).epsilon(0.02 / 0.591));
  CHECK(fit.ci_low[1] <= 0.591);
  CHECK(fit.ci_high[1] >= 0.591);
  CHECK(std::accumulate(fit.populations.begin(), fit.populations.end(), 0.0) == doctest::Approx(1.0));

  CMatrix mix = CMatrix::Zero(4, 4);
  mix(0, 0) = mix(1, 1) = 0.5;
  const MarginalFit m = fit_marginal_photon_populations(draw(FockDensityMatrix(1, 3, mix), 12000, 3), 2, bins, 50, 3);
  CHECK(m.populations[0] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(m.populations[1] == doctest::Approx(0.5).epsilon(0.1));

  CHECK_THROWS_AS(fit_marginal_photon_populations(std::vector<double>(500, 0.1), 2), std::invalid_argument);
  CHECK_THROWS(fit_marginal_photon_populations(std::vector<double>(2000, 100.0), 2));
}

TEST_CASE("bootstrap: constant estimator, classical consistency, coverage, determinism") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> xs(400);
  for (auto& x : xs) x = n(rng);
  const auto constant = bootstrap(xs, [](const std::vector<double>&) { return std::vector<double>{3.0}; }, 20, 1);
  CHECK(constant.sd[0] == 0.0);
  CHECK_THROWS_AS(bootstrap(xs, [](const std::vector<double>&) { return std::vector<double>{}; }, 1, 1),
                  std::invalid_argument);

  auto mean = [](const std::vector<double>& v) {
    return std::vector<double>{std::accumulate(v.begin(), v.end(), 0.0) / v.size()};
  };
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& x : xs) x = n(rng);
    const auto b = bootstrap(xs, mean, 250, 100 + trial);
    CHECK(b.sd[0] == doctest::Approx(1 / std::sqrt(400.0)).epsilon(0.3));
    CHECK(b.hi3[0] - b.lo3[0] == doctest::Approx(6 * b.sd[0]));
  }
  const auto again = bootstrap(xs, mean, 50, 7);
  CHECK(again.replicates == bootstrap(xs, mean, 50, 7).replicates);

  const FockDensityMatrix vac = pure_state(fock_amplitudes({0}, 3), 1, 3);
  TomographyOptions opts;
  opts.settings = settings(1, 1000, 8);
  opts.bootstrap = 30;
  const TomographyRun run = run_tomography(vac, fock_amplitudes({0}, 3), {}, opts);
  CHECK(run.fidelity_bootstrap.resamples == 30);
  CHECK(run.fidelity_bootstrap.lo3[0] <= run.fidelity);
  CHECK(run.fidelity_bootstrap.hi3[0] >= run.fidelity);
  const TomographyRun rerun = run_tomography(vac, fock_amplitudes({0}, 3), {}, opts);
  CHECK(rerun.fidelity_bootstrap.replicates == run.fidelity_bootstrap.replicates);
}

TEST_CASE("cardinal states: encodings, suites and the phase-reference contrast") {
  CHECK(cardinal_labels().size() == 6);
  const Eigen::Vector2cd pi = cardinal_amplitudes("+i");
  CHECK(pi(1) == cplx(0, kH));
  CHECK_THROWS_AS(cardinal_amplitudes("x"), std::invalid_argument);
  const FockDensityMatrix e = encode_qubit(QubitKind::TimeBin, cardinal_amplitudes("1"), 3);
  CHECK(e(e.index({1, 0}), e.index({1, 0})).real() == doctest::Approx(1.0));

  TomographyOptions opts;
  opts.settings = settings(1, 1000, 3);
  opts.bootstrap = 0;
  opts.loss_correct = true;
  const CardinalSuite tb = cardinal_state_suite(QubitKind::TimeBin, {}, opts);
  CHECK(tb.rows.size() == 6);
  CHECK(tb.average >= 0.97);

  opts.loss_correct = false;
  opts.bootstrap = 5;
  const CardinalSuite tr = cardinal_state_suite(QubitKind::TransmonSim, {}, opts);
  CHECK(tr.average >= 0.97);
  CHECK(tr.average_sd > 0.0);

  const CVector sr_plus = single_rail_amplitudes(kH, kH, 3);
  opts.bootstrap = 0;
  const double sep = run_tomography(pure_state(sr_plus, 1, 3), sr_plus, {1.0, true}, opts).fidelity;
  CHECK(sep == doctest::Approx(0.5).epsilon(0.02));

  const CVector tb_plus = time_bin_amplitudes(kH, kH, 3);
  opts.settings.seed = 4;
  const double tb_shared = run_tomography(pure_state(tb_plus, 2, 3), tb_plus, {1.0, false}, opts).fidelity;
  const double tb_sep = run_tomography(pure_state(tb_plus, 2, 3), tb_plus, {1.0, true}, opts).fidelity;
  CHECK(std::abs(tb_shared - tb_sep) < 0.01);
}

}  // TEST_SUITE
