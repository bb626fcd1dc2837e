#include "doctest.h"

#include <cmath>
#include <filesystem>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"
#include "fibernoise/fft.hpp"
#include "fibernoise/keyvalue.hpp"
#include "fibernoise/model.hpp"
#include "fibernoise/model_io.hpp"

using namespace fibernoise;

namespace {

ResponseModel single(double f, double w, double d) { return ResponseModel({{f, w, d}}, 1.0); }

// Adaptive Gauss-Kronrod over [0, 120]; every test model decays at least as exp(-0.5 tau).
Complex quadrature_spectrum(const ResponseModel& m, double omega) {
  using boost::math::quadrature::gauss_kronrod;
  auto re = [&](double t) { return std::cos(omega * t) * raman_response(m, t); };
  auto im = [&](double t) { return std::sin(omega * t) * raman_response(m, t); };
  double err = 0.0;
  const double a = gauss_kronrod<double, 61>::integrate(re, 0.0, 120.0, 25, 1e-14, &err);
  const double b = gauss_kronrod<double, 61>::integrate(im, 0.0, 120.0, 25, 1e-14, &err);
  return {a, b};
}

}  // namespace

TEST_CASE("raman response is causal and matches direct evaluation") {
  const auto m = single(1.0, 2.0, 0.5);
  CHECK(raman_response(m, -1.0) == 0.0);
  CHECK(raman_response(m, -1e-300) == 0.0);
  CHECK(raman_response(single(1.0, 1.0, 1.0), 0.0) == 0.0);
  // 0.5 exp(-0.5) sin 2 to 30 digits
  CHECK(raman_response(m, 1.0) == doctest::Approx(0.275758384083790367592848064817).epsilon(1e-15));
}

TEST_CASE("closed-form spectrum matches quadrature") {
  const auto m = single(1.0, 2.0, 0.5);
  for (double w : {0.3, 1.0, 2.0, 3.7, -1.0}) {
    const Complex q = quadrature_spectrum(m, w);
    const Complex h = raman_spectrum(m, w);
    CHECK(std::abs(h - q) <= 1e-8 * std::abs(q));
  }
  const Complex peak = quadrature_spectrum(m, 2.0);
  CHECK(raman_gain(m, 2.0) == doctest::Approx(2.0 * std::abs(peak.imag())).epsilon(1e-8));

  const ResponseModel two({{0.4, 1.5, 0.7}, {-0.1, 4.0, 2.0}}, 0.7);
  for (double w : {0.5, 2.5, 6.0}) {
    const Complex q = quadrature_spectrum(two, w);
    CHECK(std::abs(raman_spectrum(two, w) - q) <= 1e-8 * std::abs(q));
  }
}

TEST_CASE("spectrum symmetry and normalization") {
  const ResponseModel m({{0.3, 1.5, 0.7}, {-0.05, 4.0, 2.0}, {0.1, 0.2, 0.05}}, 0.0);
  const double f = raman_fraction(m);
  const ResponseModel normalized(m.lorentzians(), 1.0 - f);
  CHECK(std::abs(response_spectrum(normalized, 0.0) - Complex(1.0, 0.0)) < 1e-12);
  CHECK(response_spectrum(normalized, 0.0).imag() == 0.0);
  CHECK(raman_gain(normalized, 0.0) == 0.0);
  for (int i = -400; i <= 400; ++i) {
    const double w = 0.0371 * i;
    const Complex a = response_spectrum(normalized, w);
    const Complex b = response_spectrum(normalized, -w);
    CHECK(std::abs(a - std::conj(b)) < 1e-12);
    CHECK(raman_gain(normalized, w) == raman_gain(normalized, -w));
  }
}

TEST_CASE("raman fraction closed form") {
  CHECK(raman_fraction(ResponseModel::electronic()) == 0.0);
  const auto m = single(1.0, 1.0, 1.0);
  CHECK(raman_fraction(m) == doctest::Approx(0.5).epsilon(1e-15));
  using boost::math::quadrature::gauss_kronrod;
  const double q = gauss_kronrod<double, 61>::integrate([&](double t) { return raman_response(m, t); }, 0.0, 120.0,
                                                        25, 1e-15);
  CHECK(q == doctest::Approx(0.5).epsilon(1e-12));
  const ResponseModel two({{0.4, 1.5, 0.7}, {-0.1, 4.0, 2.0}}, 0.7);
  const double q2 = gauss_kronrod<double, 61>::integrate([&](double t) { return raman_response(two, t); }, 0.0,
                                                         120.0, 25, 1e-15);
  CHECK(raman_fraction(two) == doctest::Approx(q2).epsilon(1e-12));
}

TEST_CASE("gain slope at zero matches a finite difference") {
  const ResponseModel m({{0.4, 1.5, 0.7}, {-0.1, 4.0, 2.0}}, 0.7);
  const double h = 1e-5;
  const double fd = (response_spectrum(m, h).imag() - response_spectrum(m, -h).imag()) / (2.0 * h);
  CHECK(raman_gain_slope_at_zero(m) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("sampled response FFT matches the analytic spectrum") {
  const ResponseModel m({{0.4, 2.0, 0.5}, {0.2, 5.0, 1.0}}, 0.0);
  const int n = 1 << 18;
  const double window = 200.0;
  const double dt = window / n;
  ComplexArray h(n);
  for (int i = 0; i < n; ++i) h[i] = raman_response(m, i * dt) * dt;
  const ComplexArray spectrum = Fft(n).to_spectrum(h);
  double peak = 0.0, worst = 0.0;
  const double dw = 2.0 * constants::pi / window;
  for (int k = -n / 4; k < n / 4; ++k) {
    const Complex exact = raman_spectrum(m, k * dw);
    peak = std::max(peak, std::abs(exact));
    worst = std::max(worst, std::abs(spectrum[(k + n) % n] - exact));
  }
  CHECK(worst / peak < 1e-6);
}

TEST_CASE("Kramers-Kronig reconstructs h' from h''") {
  const ResponseModel m({{0.4, 2.0, 0.5}, {0.2, 5.0, 1.0}}, 0.0);
  const int n = 4096;
  const double dw = 0.05;
  RealArray im(n), re(n);
  for (int k = 0; k < n; ++k) {
    const double w = dw * (k < n / 2 ? k : k - n);
    const Complex h = raman_spectrum(m, w);
    re[k] = h.real();
    im[k] = h.imag();
  }
  const RealArray rebuilt = kramers_kronig(im, true);
  const RealArray back = kramers_kronig(re, false);
  const double scale = re.abs().maxCoeff();
  double worst = 0.0, worst_back = 0.0;
  for (int k = 0; k < n; ++k) {
    const int j = k < n / 2 ? k : k - n;
    if (std::abs(j) > n / 4) continue;
    worst = std::max(worst, std::abs(rebuilt[k] - re[k]));
    worst_back = std::max(worst_back, std::abs(back[k] - im[k]));
  }
  CHECK(worst < 1e-3 * scale);
  CHECK(worst_back < 1e-3 * scale);
}

TEST_CASE("linear response spectrum") {
  CHECK(linear_response_spectrum(GainLossProfile::transparent(), 3.0) == Complex(0.0, 0.0));
  const auto lossy = GainLossProfile::flat(0.0, 0.1);
  for (double w : {-5.0, 0.0, 2.0}) CHECK(linear_response_spectrum(lossy, w).real() == doctest::Approx(0.05));
  GainLossProfile balanced;
  balanced.gain = SpectralCurve::table({{-10.0, 0.2}, {0.0, 0.4}, {10.0, 0.1}});
  balanced.loss = balanced.gain;
  balanced.detuning_offset = 0.25;
  for (double w : {-12.0, -3.0, 0.0, 4.5, 20.0}) {
    CHECK(linear_response_spectrum(balanced, w).real() == 0.0);
    CHECK(linear_response_spectrum(balanced, w).imag() == 0.25);
  }
  GainLossProfile bad;
  bad.loss = SpectralCurve::flat(-0.1);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("spectral curve interpolation") {
  const auto c = SpectralCurve::table({{0.0, 1.0}, {2.0, 3.0}});
  CHECK(c(-1.0) == 1.0);
  CHECK(c(1.0) == doctest::Approx(2.0));
  CHECK(c(5.0) == 3.0);
  CHECK(SpectralCurve::flat(0.0).is_zero());
}

TEST_CASE("thermal occupation") {
  PhysicalFiber fiber;
  fiber.t0 = 1e-13;
  fiber.temperature = 0.0;
  CHECK(thermal_occupation(3.0, fiber) == 0.0);
  fiber.temperature = 300.0;
  const double w_kt = constants::boltzmann * fiber.temperature * fiber.t0 / constants::hbar;
  CHECK(thermal_occupation(w_kt, fiber) == doctest::Approx(0.581976706869326424).epsilon(1e-13));
  CHECK(thermal_occupation(-2.0 * w_kt, fiber) == doctest::Approx(0.156517642749665652).epsilon(1e-13));
  CHECK(std::isinf(thermal_occupation(0.0, fiber)));
  fiber.temperature = -1.0;
  CHECK_THROWS_AS(thermal_occupation(1.0, fiber), Error);
}

TEST_CASE("thermal Raman gain is continuous at zero frequency") {
  const auto m = ResponseModel({{0.3, 8.0, 1.5}}, 0.7);
  PhysicalFiber fiber;
  fiber.t0 = 1e-13;
  fiber.temperature = 300.0;
  const double at_zero = thermal_raman_gain(m, fiber, 0.0);
  CHECK(at_zero > 0.0);
  CHECK(thermal_raman_gain(m, fiber, 1e-6) == doctest::Approx(at_zero).epsilon(1e-5));
  CHECK(thermal_raman_gain(m, fiber, -1e-6) == doctest::Approx(at_zero).epsilon(1e-5));
  fiber.temperature = 0.0;
  CHECK(thermal_raman_gain(m, fiber, 0.0) == 0.0);
}

TEST_CASE("dimensionless units") {
  PhysicalFiber fiber;
  fiber.loss_db_per_km = 0.2;
  const auto u = dimensionless_units(fiber);
  CHECK(u.amplitude_attenuation_per_m == doctest::Approx(std::log(10.0) / 100000.0).epsilon(1e-14));
  CHECK(std::abs(u.amplitude_attenuation_per_m - 2.3e-5) < 0.05e-5);
  CHECK(u.x0 >= 500.0);
  CHECK(u.x0 <= 2000.0);
  CHECK(u.photon_number > 0.0);
  CHECK(u.flux_scale == doctest::Approx(u.photon_number / fiber.t0));
  CHECK(u.loss_alpha == doctest::Approx(2.0 * u.amplitude_attenuation_per_m * u.x0));
  PhysicalFiber doubled = fiber;
  doubled.t0 *= 2.0;
  CHECK(dimensionless_units(doubled).x0 == doctest::Approx(4.0 * u.x0).epsilon(1e-14));
  PhysicalFiber flat = fiber;
  flat.gvd = 0.0;
  CHECK_THROWS_AS(dimensionless_units(flat), Error);
}

TEST_CASE("model files round trip") {
  const ResponseModel m({{0.4, 1.5, 0.7}, {-0.1, 4.0, 2.0}}, 0.7);
  const auto back = response_model_from(KeyValueFile::parse(to_key_value(m).to_string()));
  REQUIRE(back.lorentzians().size() == 2);
  CHECK(back.electronic_fraction() == m.electronic_fraction());
  for (int j = 0; j < 2; ++j) {
    CHECK(back.lorentzians()[j].strength == m.lorentzians()[j].strength);
    CHECK(back.lorentzians()[j].center == m.lorentzians()[j].center);
    CHECK(back.lorentzians()[j].width == m.lorentzians()[j].width);
  }
  const double t0 = 1e-13;
  const auto thz = response_model_from(KeyValueFile::parse(to_key_value(m, FrequencyUnit::Terahertz, t0).to_string()),
                                       t0);
  CHECK(thz.lorentzians()[1].center == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS_AS(response_model_from(KeyValueFile::parse(to_key_value(m, FrequencyUnit::Terahertz, t0).to_string())),
                  Error);

  GainLossProfile p;
  p.loss = SpectralCurve::table({{-10.0, 0.2}, {0.0, 0.1}, {10.0, 0.3}});
  p.gain = SpectralCurve::flat(0.05);
  p.detuning_offset = -0.5;
  const auto q = gain_loss_profile_from(KeyValueFile::parse(to_key_value(p).to_string()));
  for (double w : {-11.0, -3.0, 4.0, 12.0})
    CHECK(linear_response_spectrum(q, w) == linear_response_spectrum(p, w));
}

TEST_CASE("key-value parsing") {
  const auto kv = KeyValueFile::parse("a = 1\n# comment\n[grid]\nmodes = 64  # trailing\nlist = 1, 2 3\n");
  CHECK(kv.get_int("a") == 1);
  CHECK(kv.get_int("grid.modes") == 64);
  CHECK(kv.get_doubles("grid.list") == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(KeyValueFile::parse("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(kv.get_double("missing"), Error);
  try {
    KeyValueFile::parse("[x]\nbroken line\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}
