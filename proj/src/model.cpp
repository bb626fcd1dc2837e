#include "fibernoise/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"
#include "fibernoise/fft.hpp"

namespace fibernoise {

ResponseModel::ResponseModel(std::vector<LorentzianTerm> lorentzians, double electronic_fraction)
    : lorentzians_(std::move(lorentzians)), electronic_fraction_(electronic_fraction) {
  require(std::isfinite(electronic_fraction), "electronic fraction must be finite");
  for (std::size_t j = 0; j < lorentzians_.size(); ++j) {
    const auto& term = lorentzians_[j];
    const std::string where = "Lorentzian term " + std::to_string(j);
    require(std::isfinite(term.strength), where + ": strength must be finite");
    require(term.center >= 0.0 && std::isfinite(term.center), where + ": center must be >= 0");
    require(term.width > 0.0 && std::isfinite(term.width), where + ": width must be > 0");
  }
}

double raman_response(const ResponseModel& model, double tau) {
  if (!(tau > 0.0)) return 0.0;
  double sum = 0.0;
  for (const auto& t : model.lorentzians())
    sum += t.strength * t.width * std::exp(-t.width * tau) * std::sin(t.center * tau);
  return sum;
}

Complex raman_spectrum(const ResponseModel& model, double omega) {
  // integral_0^inf exp(i W tau) D exp(-D tau) sin(W_j tau) dtau
  //   = D / 2i * [1 / (D - i (W + W_j)) - 1 / (D - i (W - W_j))]
  constexpr Complex i{0.0, 1.0};
  Complex sum = 0.0;
  for (const auto& t : model.lorentzians()) {
    const Complex up = 1.0 / (t.width - i * (omega + t.center));
    const Complex down = 1.0 / (t.width - i * (omega - t.center));
    sum += t.strength * t.width / (2.0 * i) * (up - down);
  }
  return sum;
}

Complex response_spectrum(const ResponseModel& model, double omega) {
  return model.electronic_fraction() + raman_spectrum(model, omega);
}

ComplexArray response_spectrum(const ResponseModel& model, const RealArray& omega) {
  return omega.unaryExpr([&](double w) { return response_spectrum(model, w); });
}

double raman_gain(const ResponseModel& model, double omega) {
  return 2.0 * std::abs(raman_spectrum(model, omega).imag());
}

double raman_fraction(const ResponseModel& model) {
  double f = 0.0;
  for (const auto& t : model.lorentzians())
    f += t.strength * t.width * t.center / (t.width * t.width + t.center * t.center);
  return f;
}

double raman_gain_slope_at_zero(const ResponseModel& model) {
  double slope = 0.0;
  for (const auto& t : model.lorentzians()) {
    const double d2 = t.width * t.width + t.center * t.center;
    slope += 2.0 * t.strength * t.width * t.width * t.center / (d2 * d2);
  }
  return slope;
}

SpectralCurve SpectralCurve::flat(double value) {
  SpectralCurve c;
  c.value_ = value;
  return c;
}

SpectralCurve SpectralCurve::table(std::vector<std::pair<double, double>> samples) {
  require(!samples.empty(), "spectral curve table needs at least one sample");
  std::sort(samples.begin(), samples.end());
  for (std::size_t k = 1; k < samples.size(); ++k)
    require(samples[k].first > samples[k - 1].first, "spectral curve table has repeated frequencies");
  SpectralCurve c;
  c.samples_ = std::move(samples);
  return c;
}

double SpectralCurve::operator()(double omega) const {
  if (samples_.empty()) return value_;
  if (omega <= samples_.front().first) return samples_.front().second;
  if (omega >= samples_.back().first) return samples_.back().second;
  auto hi = std::upper_bound(samples_.begin(), samples_.end(), omega,
                             [](double w, const auto& s) { return w < s.first; });
  auto lo = hi - 1;
  const double t = (omega - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

RealArray SpectralCurve::operator()(const RealArray& omega) const {
  return omega.unaryExpr([this](double w) { return (*this)(w); });
}

bool SpectralCurve::is_zero() const {
  if (samples_.empty()) return value_ == 0.0;
  return std::all_of(samples_.begin(), samples_.end(), [](const auto& s) { return s.second == 0.0; });
}

double SpectralCurve::min_value() const {
  if (samples_.empty()) return value_;
  double m = samples_.front().second;
  for (const auto& s : samples_) m = std::min(m, s.second);
  return m;
}

GainLossProfile GainLossProfile::flat(double gain, double loss) {
  GainLossProfile p;
  p.gain = SpectralCurve::flat(gain);
  p.loss = SpectralCurve::flat(loss);
  p.validate();
  return p;
}

void GainLossProfile::validate() const {
  require(gain.min_value() >= 0.0, "gain curve must be non-negative");
  require(loss.min_value() >= 0.0, "loss curve must be non-negative");
  require(std::isfinite(detuning_offset), "detuning offset must be finite");
}

Complex linear_response_spectrum(const GainLossProfile& profile, double omega) {
  return {0.5 * (profile.loss(omega) - profile.gain(omega)), profile.dispersive(omega) + profile.detuning_offset};
}

ComplexArray linear_response_spectrum(const GainLossProfile& profile, const RealArray& omega) {
  return omega.unaryExpr([&](double w) { return linear_response_spectrum(profile, w); });
}

void PhysicalFiber::validate() const {
  require(wavelength > 0.0, "fiber wavelength must be positive");
  require(group_velocity > 0.0, "fiber group velocity must be positive");
  require(n2 > 0.0, "fiber n2 must be positive");
  require(mode_area > 0.0, "fiber mode area must be positive");
  require(t0 > 0.0, "pulse time scale t0 must be positive");
  require(temperature >= 0.0, "temperature must be non-negative");
  require(std::isfinite(gvd), "fiber dispersion must be finite");
}

double thermal_occupation(double omega, const PhysicalFiber& fiber) {
  require(fiber.temperature >= 0.0, "temperature must be non-negative");
  if (fiber.temperature == 0.0) return 0.0;
  const double x = constants::hbar * std::abs(omega) / (fiber.t0 * constants::boltzmann * fiber.temperature);
  if (x == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::expm1(x);
}

double thermal_raman_gain(const ResponseModel& model, const PhysicalFiber& fiber, double omega) {
  const double n_th = thermal_occupation(omega, fiber);
  if (fiber.temperature == 0.0) return 0.0;
  if (omega == 0.0) {
    const double kt = constants::boltzmann * fiber.temperature * fiber.t0 / constants::hbar;
    return 2.0 * std::abs(raman_gain_slope_at_zero(model)) * kt;
  }
  return raman_gain(model, std::abs(omega)) * n_th;
}

double db_per_km_to_amplitude_coefficient(double db_per_km) {
  return db_per_km * std::log(10.0) / 20.0 / 1000.0;
}

DimensionlessUnits dimensionless_units(const PhysicalFiber& fiber) {
  fiber.validate();
  if (fiber.gvd == 0.0) fail(ErrorKind::InvalidArgument, "k'' = 0 leaves no dispersion length scale");
  DimensionlessUnits u;
  u.t0 = fiber.t0;
  u.x0 = fiber.t0 * fiber.t0 / std::abs(fiber.gvd);
  u.carrier_frequency = 2.0 * constants::pi * constants::speed_of_light / fiber.wavelength;
  u.photon_number = std::abs(fiber.gvd) * fiber.mode_area * constants::speed_of_light /
                    (fiber.n2 * constants::hbar * u.carrier_frequency * u.carrier_frequency * fiber.t0);
  u.flux_scale = u.photon_number / fiber.t0;
  u.amplitude_attenuation_per_m = db_per_km_to_amplitude_coefficient(fiber.loss_db_per_km);
  u.intensity_attenuation_per_m = 2.0 * u.amplitude_attenuation_per_m;
  u.amplitude_gain_per_m = db_per_km_to_amplitude_coefficient(fiber.gain_db_per_km);
  u.intensity_gain_per_m = 2.0 * u.amplitude_gain_per_m;
  u.loss_alpha = u.intensity_attenuation_per_m * u.x0;
  u.gain_alpha = u.intensity_gain_per_m * u.x0;
  return u;
}

RealArray kramers_kronig(const RealArray& samples, bool real_from_imaginary) {
  const int n = static_cast<int>(samples.size());
  require(n >= 4 && n % 2 == 0, "Kramers-Kronig grid needs an even number of samples");
  Fft fft(n);
  constexpr Complex i{0.0, 1.0};
  // Causality ties the even and odd parts of h(tau): h_even = sgn(tau) h_odd.
  ComplexArray spectrum = real_from_imaginary ? ComplexArray(i * samples.cast<Complex>())
                                              : ComplexArray(samples.cast<Complex>());
  ComplexArray time = fft.to_time(spectrum);
  for (int k = 0; k < n; ++k) {
    if (k == 0 || k == n / 2) time[k] = 0.0;
    else if (k > n / 2) time[k] = -time[k];
  }
  ComplexArray back = fft.to_spectrum(time);
  return real_from_imaginary ? RealArray(back.real()) : RealArray(back.imag());
}

}  // namespace fibernoise
