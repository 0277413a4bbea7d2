#include "tbf/fock.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tbf/error.hpp"
#include "tbf/hermite.hpp"

namespace tbf {

namespace {

double binomial(int n, int k) { return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0))); }

/// I (x) ... (x) op (x) ... (x) I with `op` on mode `mode`.
CMatrix embed(const CMatrix& op, int mode, int modes, int cutoff) {
  CMatrix out = CMatrix::Identity(1, 1);
  const Eigen::Index d = cutoff + 1;
  for (int m = 0; m < modes; ++m) {
    const CMatrix factor = (m == mode) ? op : CMatrix::Identity(d, d);
    CMatrix next(out.rows() * d, out.cols() * d);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) next.block(i * d, j * d, d, d) = out(i, j) * factor;
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

Eigen::Index fock_dimension(int modes, int cutoff) {
  if (modes < 1) throw std::invalid_argument("at least one mode is required");
  if (cutoff < 1) throw std::invalid_argument("cutoff must be at least 1");
  Eigen::Index d = 1;
  for (int m = 0; m < modes; ++m) d *= cutoff + 1;
  return d;
}

FockDensityMatrix::FockDensityMatrix(int modes, int cutoff, CMatrix rho) : modes_(modes), cutoff_(cutoff), rho_(std::move(rho)) {
  const Eigen::Index d = fock_dimension(modes, cutoff);
  if (rho_.rows() != d || rho_.cols() != d) {
    throw std::invalid_argument("density matrix is " + std::to_string(rho_.rows()) + "x" + std::to_string(rho_.cols()) +
                                ", expected " + std::to_string(d) + "x" + std::to_string(d));
  }
}

Eigen::Index FockDensityMatrix::index(const std::vector<int>& occ) const {
  if (static_cast<int>(occ.size()) != modes_) throw std::invalid_argument("occupation list does not match mode count");
  Eigen::Index idx = 0;
  for (int n : occ) {
    if (n < 0 || n > cutoff_) throw std::invalid_argument("occupation outside the cutoff");
    idx = idx * mode_dim() + n;
  }
  return idx;
}

std::vector<int> FockDensityMatrix::occupations(Eigen::Index idx) const {
  std::vector<int> occ(modes_);
  for (int m = modes_ - 1; m >= 0; --m) {
    occ[m] = static_cast<int>(idx % mode_dim());
    idx /= mode_dim();
  }
  return occ;
}

int FockDensityMatrix::total_photons(Eigen::Index idx) const {
  int total = 0;
  for (int n : occupations(idx)) total += n;
  return total;
}

double FockDensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double FockDensityMatrix::min_eigenvalue() const {
  const CMatrix herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void FockDensityMatrix::check_invariants() const {
  if (hermiticity_error() > 1e-12) throw NumericalError("density matrix is not Hermitian");
  if (std::abs(trace() - 1.0) > 1e-10) throw NumericalError("density matrix trace is " + std::to_string(trace()));
  if (min_eigenvalue() < -1e-9) throw NumericalError("density matrix has a negative eigenvalue");
}

FockDensityMatrix pure_state(const CVector& amplitudes, int modes, int cutoff) {
  const Eigen::Index d = fock_dimension(modes, cutoff);
  if (amplitudes.size() != d) throw std::invalid_argument("amplitude vector length does not match the basis");
  const double norm = amplitudes.norm();
  if (norm == 0.0) throw std::invalid_argument("all-zero amplitude vector");
  CVector psi = amplitudes;
  if (std::abs(norm * norm - 1.0) > 1e-8) {
    std::cerr << "warning: amplitudes renormalized (squared norm was " << norm * norm << ")\n";
    psi /= norm;
  }
  return FockDensityMatrix(modes, cutoff, psi * psi.adjoint());
}

CVector fock_amplitudes(const std::vector<int>& occupations, int cutoff) {
  const int modes = static_cast<int>(occupations.size());
  FockDensityMatrix shape(modes, cutoff, CMatrix::Zero(fock_dimension(modes, cutoff), fock_dimension(modes, cutoff)));
  CVector v = CVector::Zero(shape.dim());
  v(shape.index(occupations)) = 1.0;
  return v;
}

CVector single_rail_amplitudes(cplx alpha, cplx beta, int cutoff) {
  CVector v = CVector::Zero(cutoff + 1);
  v(0) = alpha;
  v(1) = beta;
  return v;
}

CVector time_bin_amplitudes(cplx alpha, cplx beta, int cutoff) {
  return alpha * fock_amplitudes({0, 1}, cutoff) + beta * fock_amplitudes({1, 0}, cutoff);
}

FockDensityMatrix loss_channel(const FockDensityMatrix& rho, double eta) {
  return loss_channel(rho, std::vector<double>(rho.modes(), eta));
}

FockDensityMatrix loss_channel(const FockDensityMatrix& rho, const std::vector<double>& eta_per_mode) {
  if (static_cast<int>(eta_per_mode.size()) != rho.modes()) {
    throw std::invalid_argument("one transmissivity per mode is required");
  }
  const int n_max = rho.cutoff();
  CMatrix out = rho.matrix();
  for (int mode = 0; mode < rho.modes(); ++mode) {
    const double eta = eta_per_mode[mode];
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("transmissivity must lie in [0, 1]");
    if (eta == 1.0) continue;
    CMatrix acc = CMatrix::Zero(out.rows(), out.cols());
    // Kraus operator A_k removes k photons: <n-k|A_k|n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k).
    for (int k = 0; k <= n_max; ++k) {
      CMatrix a = CMatrix::Zero(n_max + 1, n_max + 1);
      for (int n = k; n <= n_max; ++n) {
        a(n - k, n) = std::sqrt(binomial(n, k) * std::pow(eta, n - k) * std::pow(1.0 - eta, k));
      }
      const CMatrix full = embed(a, mode, rho.modes(), n_max);
      acc.noalias() += full * out * full.adjoint();
    }
    out = std::move(acc);
  }
  return FockDensityMatrix(rho.modes(), rho.cutoff(), std::move(out));
}

FockDensityMatrix phase_drift_channel(const FockDensityMatrix& rho, const std::vector<int>& modes, PhaseDrift drift) {
  for (int m : modes) {
    if (m < 0 || m >= rho.modes()) throw std::invalid_argument("phase drift mode index out of range");
  }
  auto photons = [&](Eigen::Index idx) {
    const auto occ = rho.occupations(idx);
    int n = 0;
    for (int m : modes) n += occ[m];
    return n;
  };
  CMatrix out = rho.matrix();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const int diff = photons(i) - photons(j);
      if (drift.kind == PhaseDrift::Kind::Uniform) {
        if (diff != 0) out(i, j) = 0.0;
      } else {
        out(i, j) *= std::polar(1.0, drift.theta * diff);
      }
    }
  }
  return FockDensityMatrix(rho.modes(), rho.cutoff(), std::move(out));
}

FockDensityMatrix reduced_state(const FockDensityMatrix& rho, int keep_mode) {
  if (keep_mode < 0 || keep_mode >= rho.modes()) throw std::invalid_argument("mode index out of range");
  const int d = rho.mode_dim();
  CMatrix out = CMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < rho.dim(); ++i) {
    const auto oi = rho.occupations(i);
    for (Eigen::Index j = 0; j < rho.dim(); ++j) {
      const auto oj = rho.occupations(j);
      bool traced_equal = true;
      for (int m = 0; m < rho.modes(); ++m) traced_equal = traced_equal && (m == keep_mode || oi[m] == oj[m]);
      if (traced_equal) out(oi[keep_mode], oj[keep_mode]) += rho(i, j);
    }
  }
  return FockDensityMatrix(1, rho.cutoff(), std::move(out));
}

double quadrature_marginal(const FockDensityMatrix& rho, double phi, double q) {
  if (rho.modes() != 1) throw std::invalid_argument("quadrature_marginal needs a single-mode state");
  const auto psi = hermite_functions(q, rho.cutoff());
  double p = 0.0;
  for (int n = 0; n <= rho.cutoff(); ++n) {
    p += rho(n, n).real() * psi[n] * psi[n];
    for (int m = n + 1; m <= rho.cutoff(); ++m) {
      p += 2.0 * (rho(n, m) * std::polar(1.0, (m - n) * phi)).real() * psi[n] * psi[m];
    }
  }
  return p;
}

double joint_marginal(const FockDensityMatrix& rho, double phi_e, double phi_l, double q_e, double q_l) {
  if (rho.modes() != 2) throw std::invalid_argument("joint_marginal needs a two-mode state");
  const int d = rho.mode_dim();
  const auto pe = hermite_functions(q_e, rho.cutoff());
  const auto pl = hermite_functions(q_l, rho.cutoff());
  cplx total = 0.0;
  for (int n = 0; n < d; ++n) {
    for (int m = 0; m < d; ++m) {
      for (int n2 = 0; n2 < d; ++n2) {
        for (int m2 = 0; m2 < d; ++m2) {
          total += rho(n * d + m, n2 * d + m2) * pe[n] * pe[n2] * pl[m] * pl[m2] *
                   std::polar(1.0, (n2 - n) * phi_e + (m2 - m) * phi_l);
        }
      }
    }
  }
  return total.real();
}

double wigner(const FockDensityMatrix& rho, double q, double p) {
  if (rho.modes() != 1) throw std::invalid_argument("wigner needs a single-mode state");
  const cplx alpha{q / std::sqrt(2.0), p / std::sqrt(2.0)};
  const double r2 = std::norm(alpha);
  const double gauss = std::exp(-2.0 * r2) / std::numbers::pi;
  double w = 0.0;
  for (int n = 0; n <= rho.cutoff(); ++n) {
    for (int m = n; m <= rho.cutoff(); ++m) {
      // Kernel of |m><n| for m >= n; the transposed entry is its conjugate.
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      const double ratio = std::exp(0.5 * (std::lgamma(n + 1.0) - std::lgamma(m + 1.0)));
      const cplx kernel = sign * ratio * std::pow(2.0 * std::conj(alpha), m - n) * gauss *
                          std::assoc_laguerre(static_cast<unsigned>(n), static_cast<unsigned>(m - n), 4.0 * r2);
      if (m == n) {
        w += (rho(m, n) * kernel).real();
      } else {
        w += 2.0 * (rho(m, n) * kernel).real();
      }
    }
  }
  return w;
}

Eigen::MatrixXd wigner_grid(const FockDensityMatrix& rho, const std::vector<double>& qs, const std::vector<double>& ps) {
  Eigen::MatrixXd out(qs.size(), ps.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (std::size_t j = 0; j < ps.size(); ++j) out(i, j) = wigner(rho, qs[i], ps[j]);
  }
  return out;
}

double fidelity(const FockDensityMatrix& rho, const CVector& target) {
  if (target.size() != rho.dim()) throw std::invalid_argument("fidelity target dimension mismatch");
  return (target.adjoint() * rho.matrix() * target)(0, 0).real();
}

Eigen::Matrix2cd project_single_photon_subspace(const FockDensityMatrix& rho) {
  if (rho.modes() != 2) throw std::invalid_argument("single-photon projection needs a two-mode state");
  const Eigen::Index idx[2] = {rho.index({0, 1}), rho.index({1, 0})};
  Eigen::Matrix2cd block;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) block(i, j) = rho(idx[i], idx[j]);
  }
  const double pop = block.trace().real();
  if (!(pop > 1e-15)) throw NumericalError("no valid time-bin events");
  return block / pop;
}

double qubit_fidelity(const Eigen::Matrix2cd& rho, const Eigen::Vector2cd& target) {
  return (target.adjoint() * rho * target)(0, 0).real();
}

}  // namespace tbf
