#pragma once

// Ensemble accumulators and ordering-corrected observables.
//
// Units: photon numbers per mode a_k^+ a_k with a_k = sqrt(n / T) dtau sum_n phi_n exp(i W_k tau_n),
// photon flux in photons per unit dimensionless time, quadratures X = (A e^{-i theta} + A^+ e^{i theta}) / sqrt(2)
// for the local-oscillator mode A = sqrt(n) dtau sum_n LO*_n phi_n. Wigner averages are symmetrically
// ordered: the vacuum correction is 1/2 per mode in frequency space, equivalently 1/(2 dtau) per grid
// cell in time, and is applied once, by the functions below.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fibernoise/grid.hpp"
#include "fibernoise/integrator.hpp"
#include "fibernoise/types.hpp"

namespace fibernoise {

struct LocalOscillator {
  std::string name;
  ComplexArray mode;  ///< normalized to sum |LO|^2 dtau = 1
};

/// Scales `mode` to unit norm on the grid; throws for a zero mode.
LocalOscillator make_local_oscillator(std::string name, const ComplexArray& mode, double dtau);

/// Streaming per-bin mean and centered second moments of complex samples (Welford updates,
/// Chan merges). Identical samples leave the second moments exactly zero.
struct RunningMoments {
  long long count = 0;
  ComplexArray mean;
  RealArray m2_re;
  RealArray m2_im;

  explicit RunningMoments(Eigen::Index size = 0);
  void add(const ComplexArray& x);
  void merge(const RunningMoments& other);
  /// Standard errors of the mean, real and imaginary parts separately.
  RealArray se_real() const;
  RealArray se_imag() const;
  bool all_finite() const;
};

/// Streaming means, variances and covariance of two real variables.
struct RunningCovariance {
  long long count = 0;
  double mean_x = 0.0, mean_y = 0.0;
  double m2_x = 0.0, m2_y = 0.0, c_xy = 0.0;

  void add(double x, double y);
  void merge(const RunningCovariance& other);
};

struct CheckpointMoments {
  double zeta = 0.0;
  RunningMoments field;
  RunningMoments intensity;  ///< |phi|^2 or phi+ phi per cell
  RunningMoments photons;    ///< a_k^+ a_k per mode
  RunningMoments total;      ///< one bin: sum_k a_k^+ a_k
  RunningCovariance first_total;  ///< (sum_k W_k Re n_k, sum_k Re n_k)
  /// Local-oscillator projections (q, q+) per oscillator, one entry per included trajectory.
  std::vector<std::vector<std::array<Complex, 2>>> projections;
};

struct EnsembleResult {
  SimulationGrid grid;
  Representation representation = Representation::Wigner;
  Ordering raw_ordering = Ordering::Symmetric;  ///< ordering of the accumulated moments
  double photon_number = 1.0;
  std::vector<LocalOscillator> oscillators;
  std::vector<CheckpointMoments> checkpoints;
  long long trajectory_count = 0;
  long long diverged_count = 0;
  std::vector<std::string> divergences;  ///< one message per excluded trajectory
  std::vector<std::string> warnings;

  EnsembleResult() = default;
  EnsembleResult(const SimulationGrid& grid, Representation rep, Ordering raw, double photon_number,
                 std::vector<LocalOscillator> oscillators, const std::vector<double>& checkpoint_zetas);

  void add(const TrajectoryRecord& record);
  /// Appends `other`; merging blocks in a fixed order gives results independent of scheduling.
  void merge(const EnsembleResult& other);
  void add_warning(const std::string& warning);
  bool all_finite() const;
};

struct ProfileTable {
  RealArray coordinate;
  RealArray value;
  RealArray se;
  RealArray imag;  ///< mean imaginary part (positive-P diagnostic, zero for Wigner)
  RealArray imag_se;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Per-mode photon numbers a_k^+ a_k of one state, FFT order.
ComplexArray mode_photon_numbers(const FieldState& state, double photon_number, const SimulationGrid& grid);

/// Photons per unit time over tau; normally ordered by default.
ProfileTable photon_flux(const EnsembleResult& result, int checkpoint, Ordering ordering = Ordering::Normal);
/// Photons per mode over ascending W. Antinormal ordering throws UnsupportedOrdering.
ProfileTable optical_spectrum(const EnsembleResult& result, int checkpoint, Ordering ordering);
Estimate total_photon_number(const EnsembleResult& result, int checkpoint, Ordering ordering = Ordering::Normal);
/// Normally ordered intensity-weighted mean frequency; ZeroIntensity when the weight is not positive.
Estimate mean_frequency(const EnsembleResult& result, int checkpoint);
Estimate quadrature_variance(const EnsembleResult& result, int checkpoint, int oscillator, double theta,
                             Ordering ordering);
/// Minimum over the local-oscillator phase; `theta` receives the minimizing phase.
Estimate minimum_quadrature_variance(const EnsembleResult& result, int checkpoint, int oscillator, Ordering ordering,
                                     double* theta = nullptr);

/// Warnings for positive-P moments whose imaginary parts are not consistent with zero: the total
/// photon number beyond `z_limit` standard errors, or more than 1% of flux/spectrum bins beyond it.
std::vector<std::string> imaginary_part_diagnostics(const EnsembleResult& result, double z_limit = 4.0);

}  // namespace fibernoise
