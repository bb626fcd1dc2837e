#pragma once

// Dimensionless response functions of the fiber and physical-unit bridges.
//
// Fourier convention for response functions: f~(W) = integral dtau exp(i W tau) f(tau),
// without a 1/sqrt(2 pi) factor. Stochastic fields (noise.hpp) use the symmetric
// 1/sqrt(2 pi) convention instead.

#include <optional>
#include <utility>
#include <vector>

#include "fibernoise/types.hpp"

namespace fibernoise {

/// One damped-sinusoid term F * D * exp(-D tau) * sin(W tau) of the delayed response.
struct LorentzianTerm {
  double strength = 0.0;  ///< F, may be negative
  double center = 0.0;    ///< W >= 0
  double width = 1.0;     ///< D > 0
};

/// Total nonlinear response h = h_E + h_R: an instantaneous electronic part of weight
/// `electronic_fraction` plus a causal sum of Lorentzian terms. Term 0, when present,
/// is reserved for the low-frequency Brillouin contribution.
class ResponseModel {
 public:
  ResponseModel() = default;
  ResponseModel(std::vector<LorentzianTerm> lorentzians, double electronic_fraction);

  /// h = delta(tau): no delayed response.
  static ResponseModel electronic() { return ResponseModel({}, 1.0); }

  const std::vector<LorentzianTerm>& lorentzians() const { return lorentzians_; }
  double electronic_fraction() const { return electronic_fraction_; }
  bool has_raman() const { return !lorentzians_.empty(); }

 private:
  std::vector<LorentzianTerm> lorentzians_;
  double electronic_fraction_ = 1.0;
};

/// h_R(tau); exactly zero for tau <= 0.
double raman_response(const ResponseModel& model, double tau);

/// Delayed part h_R~(W) from the closed-form transform of each term.
Complex raman_spectrum(const ResponseModel& model, double omega);

/// h~(W) = (1 - f) + h_R~(W) = h'(W) + i h''(W).
Complex response_spectrum(const ResponseModel& model, double omega);
ComplexArray response_spectrum(const ResponseModel& model, const RealArray& omega);

/// alpha_R(W) = 2 |h''(W)|.
double raman_gain(const ResponseModel& model, double omega);

/// f = integral_0^inf h_R(tau) dtau = sum_j F_j D_j W_j / (D_j^2 + W_j^2).
double raman_fraction(const ResponseModel& model);

/// d h''/dW at W = 0.
double raman_gain_slope_at_zero(const ResponseModel& model);

/// A real-valued spectral curve: either a constant or a table of (W, value) samples
/// evaluated by linear interpolation with constant extrapolation past the ends.
class SpectralCurve {
 public:
  SpectralCurve() = default;
  static SpectralCurve flat(double value);
  static SpectralCurve table(std::vector<std::pair<double, double>> samples);

  double operator()(double omega) const;
  RealArray operator()(const RealArray& omega) const;

  bool is_flat() const { return samples_.empty(); }
  double flat_value() const { return value_; }
  const std::vector<std::pair<double, double>>& samples() const { return samples_; }
  bool is_zero() const;
  double min_value() const;

 private:
  double value_ = 0.0;
  std::vector<std::pair<double, double>> samples_;
};

/// Linear gain and loss: Re g~ = (alpha_A - alpha_G) / 2, Im g~ = g' + detuning offset.
struct GainLossProfile {
  SpectralCurve gain;        ///< alpha_G(W) >= 0
  SpectralCurve loss;        ///< alpha_A(W) >= 0
  SpectralCurve dispersive;  ///< g'(W)
  double detuning_offset = 0.0;

  static GainLossProfile transparent() { return {}; }
  static GainLossProfile flat(double gain, double loss);

  void validate() const;
};

Complex linear_response_spectrum(const GainLossProfile& profile, double omega);
ComplexArray linear_response_spectrum(const GainLossProfile& profile, const RealArray& omega);

/// SI description of a fiber and its pulse time scale.
struct PhysicalFiber {
  double wavelength = 1.55e-6;          ///< m
  double group_velocity = 2.0e8;        ///< m/s
  double gvd = -1.0e-27;                ///< k'' in s^2/m
  double n2 = 2.6e-20;                  ///< m^2/W
  double mode_area = 5.0e-11;           ///< m^2
  double t0 = 1.0e-12;                  ///< s
  double temperature = 0.0;             ///< K
  double loss_db_per_km = 0.0;
  double gain_db_per_km = 0.0;

  void validate() const;
};

/// Bose occupation of a phonon at physical angular frequency |W| / t0.
/// Zero at T = 0; +inf at W = 0 for T > 0. Throws for T < 0.
double thermal_occupation(double omega, const PhysicalFiber& fiber);

/// alpha_R(|W|) * n_th(|W| / t0), with the finite W -> 0 limit 2 |h''_slope(0)| k T t0 / hbar.
double thermal_raman_gain(const ResponseModel& model, const PhysicalFiber& fiber, double omega);

struct DimensionlessUnits {
  double t0 = 0.0;                          ///< s
  double x0 = 0.0;                          ///< dispersion length t0^2 / |k''|, m
  double photon_number = 0.0;               ///< soliton photon scale n-bar
  double flux_scale = 0.0;                  ///< n-bar / t0, photons per second
  double carrier_frequency = 0.0;           ///< omega_0, rad/s
  double amplitude_attenuation_per_m = 0.0; ///< dB/km loss as a field-amplitude coefficient
  double intensity_attenuation_per_m = 0.0; ///< dB/km loss as an intensity coefficient
  double amplitude_gain_per_m = 0.0;
  double intensity_gain_per_m = 0.0;
  double loss_alpha = 0.0;                  ///< dimensionless intensity loss per unit zeta
  double gain_alpha = 0.0;                  ///< dimensionless intensity gain per unit zeta
};

/// Throws for k'' == 0 or non-positive scales.
DimensionlessUnits dimensionless_units(const PhysicalFiber& fiber);

/// Field-amplitude attenuation coefficient (1/m) of a dB/km figure.
double db_per_km_to_amplitude_coefficient(double db_per_km);

/// Recovers one quadrature of a causal response from the other on a uniform, FFT-ordered
/// frequency grid W_k = k dW (k < N/2), (k - N) dW otherwise. `real_from_imaginary`
/// maps h'' to h' - h'(inf); otherwise h' - h'(inf) to h''.
RealArray kramers_kronig(const RealArray& samples, bool real_from_imaginary);

}  // namespace fibernoise
