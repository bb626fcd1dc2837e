#pragma once

#include <cstdint>

#include "fibernoise/types.hpp"

namespace fibernoise {

/// Uniform periodic time grid tau_n = -T/2 + n dtau and its FFT-ordered frequency
/// grid W_k = 2 pi k / T for k < M/2, 2 pi (k - M) / T otherwise (Nyquist at -pi/dtau).
struct SimulationGrid {
  int modes = 512;
  double window = 20.0;
  double z_end = 1.0;
  double dz = 1e-3;
  DispersionSign dispersion = DispersionSign::Anomalous;
  Representation representation = Representation::Wigner;
  std::uint64_t seed = 1;
  /// Noise coupling factor for step-halving studies; see NormalStream.
  int noise_substeps = 1;

  void validate() const;

  double dtau() const { return window / modes; }
  double domega() const;
  /// Number of dz steps to z_end; z_end must be a whole number of steps.
  long long steps() const;

  RealArray tau() const;
  RealArray omega() const;
  double tau_at(int n) const { return -0.5 * window + n * dtau(); }
  double omega_at(int k) const;
  /// Index of the -W mode.
  int mirror(int k) const { return k == 0 ? 0 : modes - k; }
};

bool is_power_of_two(int n);

}  // namespace fibernoise
