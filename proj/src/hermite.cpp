#include "tbf/hermite.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tbf {

void hermite_functions(double q, int nmax, std::vector<double>& out) {
  if (nmax < 0) throw std::invalid_argument("hermite_functions: nmax must be non-negative");
  out.resize(static_cast<std::size_t>(nmax) + 1);
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * q * q);
  if (nmax == 0) return;
  out[1] = std::sqrt(2.0) * q * out[0];
  for (int n = 1; n < nmax; ++n) {
    const double nd = n;
    out[n + 1] = std::sqrt(2.0 / (nd + 1.0)) * q * out[n] - std::sqrt(nd / (nd + 1.0)) * out[n - 1];
  }
}

std::vector<double> hermite_functions(double q, int nmax) {
  std::vector<double> out;
  hermite_functions(q, nmax, out);
  return out;
}

}  // namespace tbf
