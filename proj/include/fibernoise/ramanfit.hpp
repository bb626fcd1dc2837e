#pragma once

// Multi-Lorentzian fits of measured Raman gain spectra.
//
// The fitted quantity is the gain curve alpha_R(W) = 2 |h''(W)|. Lorentzian
// decompositions of a given curve are not unique, so the fitted curve, not the
// individual parameters, is what a fit should be judged on.

#include <filesystem>
#include <optional>
#include <vector>

#include "fibernoise/keyvalue.hpp"
#include "fibernoise/model.hpp"
#include "fibernoise/model_io.hpp"

namespace fibernoise {

struct GainSpectrumSample {
  double omega = 0.0;   ///< dimensionless frequency >= 0
  double gain = 0.0;    ///< measured alpha_R >= 0
  double weight = 1.0;  ///< > 0
};

struct FitOptions {
  int max_iterations = 2000;
  double relative_tolerance = 1e-10;  ///< stop when the accepted objective improves less than this
  /// When set, term 0 models the Brillouin contribution and its center stays in (0, bound).
  std::optional<double> brillouin_center_bound;
  /// Also fit from a start built one term at a time at the largest misfit, keeping the better fit.
  bool staged_start = true;
};

struct TermDiagnostics {
  double strength_sigma = 0.0;
  double center_sigma = 0.0;
  double width_sigma = 0.0;
};

struct FitReport {
  ResponseModel model;             ///< electronic fraction set to 1 - f, so h~(0) = 1
  double residual_rms = 0.0;       ///< sqrt(sum w r^2 / sum w)
  int iterations = 0;
  bool converged = false;
  std::vector<TermDiagnostics> terms;
  std::vector<double> objective_history;  ///< objective after each accepted step, first entry is the start
};

/// Damped Gauss-Newton fit of `n_terms` Lorentzians. Throws DegenerateData when every
/// sample sits at one frequency and InvalidArgument for fewer than 3 n_terms samples.
/// Hitting the iteration cap returns the partial result with `converged == false`.
FitReport fit_lorentzians(std::vector<GainSpectrumSample> samples, int n_terms,
                          const std::optional<ResponseModel>& initial_guess = std::nullopt,
                          const FitOptions& options = {});

/// Deterministic starting point used by fit_lorentzians when no guess is supplied.
ResponseModel initial_lorentzian_guess(std::vector<GainSpectrumSample> samples, int n_terms,
                                       std::optional<double> brillouin_center_bound = std::nullopt);

/// Rescales so that h~(0) = 1. With a target, the Lorentzian strengths are scaled to give
/// f = f_target and the electronic fraction becomes 1 - f_target; otherwise every part is
/// divided by h~(0).
ResponseModel normalize_total_response(const ResponseModel& model, std::optional<double> f_target = std::nullopt);

/// Reads a two- or three-column table (frequency, gain[, weight]); '#' starts a comment.
std::vector<GainSpectrumSample> read_gain_table(const std::filesystem::path& path, FrequencyUnit unit,
                                                std::optional<double> t0 = std::nullopt, double gain_scale = 1.0);

KeyValueFile to_key_value(const FitReport& report);

/// Plot-ready table: frequency, measured gain, fitted gain.
void write_fitted_curve(const std::filesystem::path& path, const std::vector<GainSpectrumSample>& samples,
                        const ResponseModel& model, double frequency_divisor = 1.0);

}  // namespace fibernoise
