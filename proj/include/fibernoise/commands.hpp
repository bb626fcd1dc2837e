#pragma once

// The four subcommands of the fibernoise tool as library calls. Each returns the process
// exit status for outcomes that are not errors (0, or 3 for a failed verification) and
// throws fibernoise::Error otherwise; see exit_code() for the mapping.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fibernoise/config.hpp"

namespace fibernoise {

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trajectories;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  // fit only
  std::optional<std::filesystem::path> input;
  std::optional<int> terms;
  std::optional<std::string> frequency_unit;
};

/// Configuration with command-line overrides applied and validated. Without --config
/// the defaults are used, with paths relative to the working directory.
RunConfig resolve_config(const CommandOptions& options);

/// Writes into the output directory:
///   manifest.cfg        complete configuration; `fibernoise run --config manifest.cfg` reproduces the directory
///   response.model      the response model actually used (dimensionless), when not purely electronic
///   profile.cfg         the gain-loss profile actually used, when read from a file
///   flux.tsv            zeta, tau, flux, se, imag, imag_se (normally ordered)
///   spectrum.tsv        zeta, omega, normal, se, symmetric, imag, imag_se
///   photon_number.tsv   zeta, normal, se, symmetric
///   mean_frequency.tsv  zeta, mean_frequency, se
///   quadrature.tsv      per checkpoint and local oscillator, when any are configured
///   summary.txt         trajectory counts, divergences, warnings
///   fields.bin, fields_index.tsv  checkpoint fields of the first run.field_trajectories trajectories
int cmd_run(const CommandOptions& options, std::ostream& log);

/// Fits fit.terms Lorentzians to a gain table; writes fitted.model (in the table's frequency
/// unit), fit_report.txt and fitted_curve.tsv. Throws NoConvergence after writing them when
/// the iteration cap is reached.
int cmd_fit(const CommandOptions& options, std::ostream& log);

/// Runs the correlation checks of every noise source; writes one moment table per source and
/// moment plus verify_summary.txt. Returns 3 when any source fails.
int cmd_verify(const CommandOptions& options, std::ostream& log);

/// Prints the dimensionless-unit report; also writes units.txt when an output directory is given.
int cmd_units(const CommandOptions& options, std::ostream& out);

KeyValueFile units_report(const RunConfig& config);

}  // namespace fibernoise
