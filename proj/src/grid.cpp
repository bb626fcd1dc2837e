#include "fibernoise/grid.hpp"

#include <cmath>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"

namespace fibernoise {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void SimulationGrid::validate() const {
  require(modes >= 4 && is_power_of_two(modes), "grid.modes must be a power of two >= 4");
  require(std::isfinite(window) && window > 0.0, "grid.window must be positive");
  require(std::isfinite(dz) && dz > 0.0, "grid.dz must be positive");
  require(std::isfinite(z_end) && z_end >= 0.0, "grid.z_end must be >= 0");
  require(noise_substeps >= 1, "grid.noise_substeps must be >= 1");
  steps();
}

double SimulationGrid::domega() const { return 2.0 * constants::pi / window; }

long long SimulationGrid::steps() const {
  const double n = z_end / dz;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n))
    fail(ErrorKind::InvalidArgument, "grid.z_end must be a whole number of grid.dz steps");
  return static_cast<long long>(rounded);
}

double SimulationGrid::omega_at(int k) const {
  return domega() * (k < modes / 2 ? k : k - modes);
}

RealArray SimulationGrid::tau() const {
  RealArray t(modes);
  for (int n = 0; n < modes; ++n) t[n] = tau_at(n);
  return t;
}

RealArray SimulationGrid::omega() const {
  RealArray w(modes);
  for (int k = 0; k < modes; ++k) w[k] = omega_at(k);
  return w;
}

}  // namespace fibernoise
