#pragma once

// Split-step Fourier propagation of the stochastic NLS in the propagative frame.
//
// One step of length dz is the Strang composition
//   half linear step, nonlinear step with Raman noise, additive noise G dz, half linear step.
// Field spectra use the exp(+i W tau) convention of the response functions.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fibernoise/grid.hpp"
#include "fibernoise/model.hpp"
#include "fibernoise/noise.hpp"
#include "fibernoise/state.hpp"

namespace fibernoise {

struct PropagationSettings {
  std::vector<double> checkpoints;  ///< z values, strictly increasing, multiples of dz within [0, z_end]
  double overflow_bound = 1e8;      ///< largest allowed |phi phi+| (|phi|^2 for Wigner)
  bool record_diagnostics = true;
  double edge_energy_warning = 1e-3;  ///< energy fraction tolerated in the outer 5% of the window
};

struct StepDiagnostics {
  double zeta = 0.0;
  double norm = 0.0;           ///< sum Re(phi+ phi) dtau
  double max_amplitude = 0.0;  ///< max |phi|
};

struct TrajectoryRecord {
  std::uint64_t trajectory = 0;
  std::vector<FieldState> snapshots;  ///< one per checkpoint
  std::vector<StepDiagnostics> diagnostics;
  std::vector<std::string> warnings;
};

/// phi~ <- phi~ exp[(-/+ i W^2 / 2 - g~(W)) h] and, for positive-P,
/// phi+~ <- phi+~ exp[(+/- i W^2 / 2 - conj g~(-W)) h], upper signs for anomalous dispersion.
/// `h` is the sub-step length (dz / 2 inside a Strang step).
void linear_half_step(FieldState& state, const SimulationGrid& grid, const GainLossProfile& profile, double h);

/// h~ on the FFT-ordered grid. The Nyquist entry keeps only its real part so that real
/// intensities give real convolutions.
ComplexArray response_on_grid(const ResponseModel& model, const SimulationGrid& grid);

/// (h * I)(tau_n) by FFT; `response` from response_on_grid.
ComplexArray response_convolution(const ComplexArray& intensity, const ComplexArray& response);

/// phi <- phi exp[i (h * I + G_R) dz], phi+ <- phi+ exp[-i (h * I + G_R+) dz] with I = |phi|^2
/// (Wigner) or phi+ phi (positive-P). Empty noise arrays mean no Raman noise. Throws Overflow
/// when the result exceeds `overflow_bound`.
void nonlinear_step(FieldState& state, const ComplexArray& response, const RamanNoise& noise, double dz,
                    double overflow_bound = 1e8);

/// Max |phi phi+| over the grid (max |phi|^2 for Wigner states).
double max_intensity(const FieldState& state);

/// Sum Re(phi+ phi) dtau.
double field_norm(const FieldState& state, double dtau);

/// Precomputed propagation for one run configuration; immutable and shareable across threads.
class Propagator {
 public:
  explicit Propagator(NoiseSpec spec);

  const SimulationGrid& grid() const { return noise_.spec().grid; }
  const NoiseGenerator& noise() const { return noise_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  FieldState initial_state(const ComplexArray& mean_field, std::uint64_t trajectory) const;
  /// One Strang step; `step_index` keys the noise streams.
  void step(FieldState& state, std::uint64_t trajectory, long long step_index) const;
  /// Runs to z_end. Overflow errors name the trajectory and z.
  TrajectoryRecord propagate(FieldState initial, std::uint64_t trajectory, const PropagationSettings& settings) const;

  /// Step indices of the checkpoints; validates them against the grid.
  std::vector<long long> checkpoint_steps(const std::vector<double>& checkpoints) const;

 private:
  void apply_linear(FieldState& state) const;

  NoiseGenerator noise_;
  ComplexArray response_;
  ComplexArray linear_phi_;
  ComplexArray linear_plus_;
  bool has_nonlinear_raman_ = false;
  std::vector<std::string> warnings_;
};

/// Binary checkpoint layout (little-endian as written by the host):
///   char[8] "FNFIELD1"; uint32 modes; uint32 has_plus; float64 window; float64 dz;
///   then per record: uint64 trajectory; float64 zeta; modes x (re, im) float64 for phi,
///   and the same for phi+ when has_plus is 1.
/// A text index lists trajectory, zeta and the byte offset of each record.
class CheckpointWriter {
 public:
  CheckpointWriter(const std::filesystem::path& data, const std::filesystem::path& index, const SimulationGrid& grid,
                   bool positive_p);
  ~CheckpointWriter();
  CheckpointWriter(const CheckpointWriter&) = delete;
  CheckpointWriter& operator=(const CheckpointWriter&) = delete;

  void write(std::uint64_t trajectory, const FieldState& state);
  void close();

 private:
  std::filesystem::path data_path_;
  std::filesystem::path index_path_;
  std::FILE* data_ = nullptr;
  std::FILE* index_ = nullptr;
  int modes_ = 0;
  bool positive_p_ = false;
  long long offset_ = 0;
};

struct CheckpointRecord {
  std::uint64_t trajectory = 0;
  FieldState state;
};

std::vector<CheckpointRecord> read_checkpoints(const std::filesystem::path& data);

}  // namespace fibernoise
