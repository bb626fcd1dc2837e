#pragma once

// Run configuration. Sectioned key-value text (see keyvalue.hpp); every key is optional
// unless noted and unknown keys are rejected.
//
//     [model]
//     response = silica_raman.model        # path, or "electronic" for an instantaneous response
//     raman_fraction = 0.18                # optional: rescale the delayed part to this fraction
//     profile = transparent                # path to a gain-loss-profile file, or "transparent"
//     [fiber]                              # SI units, loss and gain in dB/km
//     wavelength = 1.55e-6
//     group_velocity = 2e8
//     gvd = -1e-27
//     n2 = 2.6e-20
//     mode_area = 5e-11
//     t0 = 1e-12
//     temperature = 0
//     loss_db_per_km = 0
//     gain_db_per_km = 0
//     [grid]
//     modes = 512
//     window = 20
//     z_end = 1
//     dz = 1e-3
//     dispersion = anomalous               # or normal
//     [input]
//     shape = sech                         # sech, gaussian or vacuum
//     amplitude = 1
//     width = 1
//     center = 0
//     frequency = 0
//     [noise]
//     representation = wigner              # or positive-p
//     initial = true
//     additive = true
//     raman = true
//     photon_number = 3.7e7                # default: the fiber's soliton photon scale
//     substeps = 1
//     [run]
//     seed = 1
//     trajectories = 1
//     threads = 0                          # 0: hardware concurrency
//     block_size = 64
//     checkpoints = 0, 0.5, 1              # default: z_end only
//     overflow_bound = 1e8
//     max_divergence_fraction = 0.01
//     field_trajectories = 0               # write checkpoint fields of the first N trajectories
//     output = results                     # output directory; --out overrides
//     [observables]
//     local_oscillators = input; sech 1 0  # "input", or "<sech|gaussian> width center"
//     [verify]
//     draws = 10000
//     dz = 1e-3
//     variance_scale = 1                   # negative-control hook, 1 for real checks
//     [fit]
//     input = silica_raman_gain.tsv
//     frequency_unit = THz                 # dimensionless, THz or cm-1
//     terms = 10
//     gain_scale = 1
//     brillouin_center_bound = 0.5         # optional, same unit as the table
//     raman_fraction = 0.18                # optional normalization target
//     max_iterations = 2000
//
// Relative paths are resolved against the directory of the configuration file. Keys in
// [derived] are written by `run` for reference and ignored on input.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fibernoise/grid.hpp"
#include "fibernoise/keyvalue.hpp"
#include "fibernoise/model.hpp"
#include "fibernoise/model_io.hpp"
#include "fibernoise/noise.hpp"

namespace fibernoise {

struct InputPulse {
  std::string shape = "sech";
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  double frequency = 0.0;  ///< carrier offset W; the spectrum peaks at +frequency
};

struct OscillatorSpec {
  std::string shape = "input";  ///< input, sech or gaussian
  double width = 1.0;
  double center = 0.0;

  std::string to_string() const;
};

struct RunConfig {
  std::filesystem::path base_dir;  ///< relative paths resolve here

  std::string response = "electronic";
  std::optional<double> raman_fraction;
  std::string profile = "transparent";

  PhysicalFiber fiber;
  SimulationGrid grid;
  InputPulse input;

  bool noise_initial = true;
  bool noise_additive = true;
  bool noise_raman = true;
  std::optional<double> photon_number;

  long long trajectories = 1;
  int threads = 0;
  int block_size = 64;
  std::vector<double> checkpoints;
  double overflow_bound = 1e8;
  double max_divergence_fraction = 0.01;
  long long field_trajectories = 0;
  std::string output;
  std::vector<OscillatorSpec> oscillators;

  int verify_draws = 10000;
  std::optional<double> verify_dz;
  double variance_scale = 1.0;

  std::string fit_input;
  FrequencyUnit fit_unit = FrequencyUnit::Terahertz;
  int fit_terms = 10;
  double fit_gain_scale = 1.0;
  std::optional<double> fit_brillouin_bound;
  std::optional<double> fit_raman_fraction;
  int fit_max_iterations = 2000;

  /// Throws Config errors naming the offending key.
  void validate() const;

  std::filesystem::path resolve(const std::string& path) const;
  bool uses_response_file() const { return response != "electronic"; }
  bool uses_profile_file() const { return profile != "transparent"; }

  std::vector<double> checkpoint_list() const;
  double resolved_photon_number() const;
  double resolved_verify_dz() const { return verify_dz.value_or(grid.dz); }

  /// Model as used by the simulation: loaded, optionally rescaled, normalized to h(0) = 1.
  ResponseModel load_response() const;
  /// Profile file, or a flat profile from the fiber's dB/km figures.
  GainLossProfile load_profile() const;
  NoiseSpec noise_spec() const;
};

RunConfig run_config_from(const KeyValueFile& file, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Full serialization of the simulation-relevant keys (no fit or verify section).
KeyValueFile to_key_value(const RunConfig& config);

ComplexArray input_field(const InputPulse& pulse, const SimulationGrid& grid);
ComplexArray oscillator_mode(const OscillatorSpec& spec, const InputPulse& pulse, const SimulationGrid& grid);

}  // namespace fibernoise
