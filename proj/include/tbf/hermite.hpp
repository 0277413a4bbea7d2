#pragma once

#include <vector>

namespace tbf {

/// Normalized Hermite functions psi_0(q) .. psi_nmax(q) with
/// psi_n(q) = pi^{-1/4} (2^n n!)^{-1/2} H_n(q) exp(-q^2 / 2).
///
/// Evaluated by the upward recurrence
///   psi_{n+1} = sqrt(2/(n+1)) q psi_n - sqrt(n/(n+1)) psi_{n-1},
/// which never forms a factorial.
std::vector<double> hermite_functions(double q, int nmax);

/// Same, written into `out` (resized to nmax + 1). Avoids allocation in hot loops.
void hermite_functions(double q, int nmax, std::vector<double>& out);

}  // namespace tbf
