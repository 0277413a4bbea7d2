#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace tbf {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Density matrix on `modes` bosonic modes, each truncated at `cutoff` photons.
///
/// Basis order is row-major over the modes: for two modes |n_E n_L> has index
/// n_E * (cutoff + 1) + n_L, so the order is |00>, |01>, ..., |0N>, |10>, ...
/// Mode 0 is the early bin and mode 1 the late bin.
class FockDensityMatrix {
public:
  FockDensityMatrix(int modes, int cutoff, CMatrix rho);

  int modes() const { return modes_; }
  int cutoff() const { return cutoff_; }
  int mode_dim() const { return cutoff_ + 1; }
  Eigen::Index dim() const { return rho_.rows(); }

  const CMatrix& matrix() const { return rho_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return rho_(i, j); }

  Eigen::Index index(const std::vector<int>& occupations) const;
  std::vector<int> occupations(Eigen::Index idx) const;
  int total_photons(Eigen::Index idx) const;

  double trace() const { return rho_.trace().real(); }
  double hermiticity_error() const;
  double min_eigenvalue() const;

  /// Throws NumericalError unless Hermitian within 1e-12, unit trace within 1e-10
  /// and every eigenvalue >= -1e-9.
  void check_invariants() const;

private:
  int modes_;
  int cutoff_;
  CMatrix rho_;
};

/// Dimension of the full basis for the given mode count and cutoff.
Eigen::Index fock_dimension(int modes, int cutoff);

/// |psi><psi| from basis amplitudes. Amplitudes whose norm is off by more than 1e-8
/// are renormalized with a warning on stderr; an all-zero vector throws std::invalid_argument.
FockDensityMatrix pure_state(const CVector& amplitudes, int modes, int cutoff);

/// Amplitude vector of a number state.
CVector fock_amplitudes(const std::vector<int>& occupations, int cutoff);
/// alpha|0> + beta|1> on one mode.
CVector single_rail_amplitudes(cplx alpha, cplx beta, int cutoff);
/// alpha|01> + beta|10> on two modes, i.e. qubit |0> is the photon in the late bin.
CVector time_bin_amplitudes(cplx alpha, cplx beta, int cutoff);

/// Pure-loss channel with transmissivity eta applied to every mode independently.
FockDensityMatrix loss_channel(const FockDensityMatrix& rho, double eta);
/// Pure-loss channel with a separate transmissivity per mode.
FockDensityMatrix loss_channel(const FockDensityMatrix& rho, const std::vector<double>& eta_per_mode);

/// Common phase e^{i theta n} applied with the same theta to every listed mode.
struct PhaseDrift {
  enum class Kind { Uniform, Fixed };
  Kind kind = Kind::Uniform;
  double theta = 0.0;  // used by Kind::Fixed
};

/// Averages over the drift distribution. For uniform theta only entries whose bra and
/// ket carry equal photon number on the listed modes survive.
FockDensityMatrix phase_drift_channel(const FockDensityMatrix& rho, const std::vector<int>& modes,
                                      PhaseDrift drift = {});

/// Partial trace keeping one mode.
FockDensityMatrix reduced_state(const FockDensityMatrix& rho, int keep_mode);

/// P(q | phi) for q_phi = (a e^{-i phi} + a^dag e^{i phi}) / sqrt(2), vacuum variance 1/2.
double quadrature_marginal(const FockDensityMatrix& rho, double phi, double q);

/// Joint density of (q_E, q_L) for a two-mode state.
double joint_marginal(const FockDensityMatrix& rho, double phi_e, double phi_l, double q_e, double q_l);

/// Single-mode Wigner function W(q, p) under [q, p] = i; vacuum gives 1/pi at the origin.
double wigner(const FockDensityMatrix& rho, double q, double p);

/// W evaluated on the outer product of the grids; result(i, j) = W(qs[i], ps[j]).
Eigen::MatrixXd wigner_grid(const FockDensityMatrix& rho, const std::vector<double>& qs,
                            const std::vector<double>& ps);

/// <psi|rho|psi> for a normalized target; throws std::invalid_argument on dimension mismatch.
double fidelity(const FockDensityMatrix& rho, const CVector& target);

/// Renormalized {|01>, |10>} block of a two-mode state, in the qubit basis (|0>, |1>) = (|01>, |10>).
/// Throws NumericalError("no valid time-bin events") when that block is empty.
Eigen::Matrix2cd project_single_photon_subspace(const FockDensityMatrix& rho);

/// <psi|rho|psi> for a 2x2 qubit density matrix.
double qubit_fidelity(const Eigen::Matrix2cd& rho, const Eigen::Vector2cd& target);

}  // namespace tbf
