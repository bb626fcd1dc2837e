#include "doctest.h"

#include <cmath>
#include <filesystem>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"
#include "fibernoise/integrator.hpp"
#include "fibernoise/ramanfit.hpp"

using namespace fibernoise;

namespace {

NoiseSpec deterministic(int modes, double window, double z_end, double dz,
                        Representation rep = Representation::Wigner) {
  NoiseSpec s;
  s.representation = rep;
  s.grid.representation = rep;
  s.grid.modes = modes;
  s.grid.window = window;
  s.grid.z_end = z_end;
  s.grid.dz = dz;
  s.response = ResponseModel::electronic();
  s.initial = s.additive = s.raman = false;
  s.photon_number = 1e6;
  return s;
}

ComplexArray sech(const SimulationGrid& g, double amplitude = 1.0, double frequency = 0.0) {
  const RealArray tau = g.tau();
  ComplexArray out(g.modes);
  for (int n = 0; n < g.modes; ++n) out[n] = amplitude / std::cosh(tau[n]) * std::polar(1.0, -frequency * tau[n]);
  return out;
}

FieldState run_to_end(const Propagator& p, const ComplexArray& mean) {
  PropagationSettings settings;
  settings.checkpoints = {p.grid().z_end};
  auto rec = p.propagate(p.initial_state(mean, 0), 0, settings);
  return rec.snapshots.back();
}

double linf_soliton_error(int modes, double window, long long steps) {
  const double z = constants::pi;
  const Propagator p(deterministic(modes, window, z, z / static_cast<double>(steps)));
  const FieldState end = run_to_end(p, sech(p.grid()));
  const RealArray tau = p.grid().tau();
  double err = 0.0;
  for (int n = 0; n < modes; ++n)
    err = std::max(err, std::abs(end.phi[n] - std::polar(1.0 / std::cosh(tau[n]), 0.5 * z)));
  return err;
}

}  // namespace

TEST_CASE("fundamental soliton propagates unchanged") {
  // A wide window and fine grid reach the 1e-6 regime; see the acceptance suite for M = 512.
  CHECK(linf_soliton_error(1024, 40.0, 3142) < 1e-6);
}

TEST_CASE("gaussian broadens by the analytic dispersion law") {
  for (auto sign : {DispersionSign::Anomalous, DispersionSign::Normal}) {
    NoiseSpec s = deterministic(1024, 60.0, 1.0, 1e-3);
    s.grid.dispersion = sign;
    FieldState st;
    const RealArray tau = s.grid.tau();
    st.phi = (-0.5 * tau.square()).exp().cast<Complex>();
    // The linear step is exact in frequency, so the step size does not matter.
    for (int i = 0; i < 4; ++i) linear_half_step(st, s.grid, s.profile, 0.25);
    const Complex q = Complex(1.0, dispersion_factor(sign) * 1.0);
    double err = 0.0;
    for (int n = 0; n < s.grid.modes; ++n)
      err = std::max(err, std::abs(st.phi[n] - std::exp(-tau[n] * tau[n] / (2.0 * q)) / std::sqrt(q)));
    CHECK(err < 1e-12);
    const RealArray w = st.phi.abs2();
    const double width = std::sqrt((w * tau.square()).sum() / w.sum());
    // rms width of |phi|^2 grows as sqrt(1 + z^2) from 1 / sqrt(2)
    CHECK(width == doctest::Approx(std::sqrt(0.5) * std::sqrt(2.0)).epsilon(1e-6));
  }
}

TEST_CASE("flat loss removes energy exponentially") {
  NoiseSpec s = deterministic(256, 20.0, 2.0, 1e-2);
  s.profile = GainLossProfile::flat(0.0, 0.1);
  const Propagator p(s);
  PropagationSettings settings;
  settings.checkpoints = {0.0, 0.5, 1.0, 2.0};
  const auto rec = p.propagate(p.initial_state(sech(p.grid()), 0), 0, settings);
  const double n0 = field_norm(rec.snapshots[0], p.grid().dtau());
  for (const auto& snap : rec.snapshots)
    CHECK(field_norm(snap, p.grid().dtau()) / n0 == doctest::Approx(std::exp(-0.1 * snap.zeta)).epsilon(1e-12));

  NoiseSpec g = s;
  g.profile = GainLossProfile::flat(0.3, 0.1);
  FieldState start;
  start.phi = sech(p.grid(), 0.1);
  const FieldState grown = run_to_end(Propagator(g), start.phi);
  CHECK(field_norm(grown, p.grid().dtau()) / field_norm(start, p.grid().dtau()) ==
        doctest::Approx(std::exp(0.2 * 2.0)).epsilon(1e-12));
}

TEST_CASE("transparent propagation conserves energy with a delayed response") {
  NoiseSpec s = deterministic(512, 40.0, 2.0, 2e-3);
  s.response = normalize_total_response(ResponseModel({{1.0, 8.0, 1.5}, {0.4, 3.0, 0.8}}, 0.5), 0.18);
  for (auto rep : {Representation::Wigner, Representation::PositiveP}) {
    s.representation = rep;
    s.grid.representation = rep;
    const Propagator p(s);
    PropagationSettings settings;
    settings.checkpoints = {0.0, 2.0};
    const auto rec = p.propagate(p.initial_state(sech(p.grid(), 1.2), 0), 0, settings);
    const double dtau = p.grid().dtau();
    CHECK(field_norm(rec.snapshots[1], dtau) == doctest::Approx(field_norm(rec.snapshots[0], dtau)).epsilon(1e-12));
    if (rep == Representation::PositiveP) {
      // Without noise phi+ stays the conjugate of phi.
      CHECK((rec.snapshots[1].phi_plus - rec.snapshots[1].phi.conjugate()).abs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("balanced gain and loss equal a transparent fiber bit for bit") {
  NoiseSpec a = deterministic(256, 20.0, 1.0, 1e-2);
  NoiseSpec b = a;
  b.profile = GainLossProfile::flat(0.2, 0.2);
  const FieldState x = run_to_end(Propagator(a), sech(a.grid));
  const FieldState y = run_to_end(Propagator(b), sech(b.grid));
  CHECK((x.phi == y.phi).all());
}

TEST_CASE("frequency-shifted soliton moves at the group velocity offset") {
  const int modes = 1024;
  const double window = 40.0;
  NoiseSpec s = deterministic(modes, window, 1.0, 1e-3);
  const double nu = 5.0 * s.grid.domega();
  const Propagator p(s);
  const FieldState end = run_to_end(p, sech(p.grid(), 1.0, nu));
  const RealArray tau = p.grid().tau();
  double err = 0.0;
  // Anomalous dispersion: a carrier at +nu travels to tau = -nu z.
  for (int n = 0; n < modes; ++n) err = std::max(err, std::abs(std::abs(end.phi[n]) - 1.0 / std::cosh(tau[n] + nu)));
  CHECK(err < 1e-6);
}

TEST_CASE("shifting the input by whole cells shifts the output") {
  NoiseSpec s = deterministic(256, 30.0, 1.0, 1e-2);
  s.response = normalize_total_response(ResponseModel({{1.0, 8.0, 1.5}}, 0.5), 0.18);
  const Propagator p(s);
  const ComplexArray centered = sech(p.grid(), 1.3);
  const int cells = 17;
  ComplexArray shifted(s.grid.modes);
  for (int n = 0; n < s.grid.modes; ++n) shifted[(n + cells) % s.grid.modes] = centered[n];
  const FieldState a = run_to_end(p, centered);
  const FieldState b = run_to_end(p, shifted);
  double err = 0.0;
  for (int n = 0; n < s.grid.modes; ++n)
    err = std::max(err, std::abs(std::norm(b.phi[(n + cells) % s.grid.modes]) - std::norm(a.phi[n])));
  CHECK(err < 1e-12);
}

TEST_CASE("response convolution matches direct quadrature") {
  const ResponseModel m({{1.0, 2.0, 0.5}}, 0.6);
  SimulationGrid g;
  g.modes = 1024;
  g.window = 80.0;
  const ComplexArray response = response_on_grid(m, g);
  const RealArray tau = g.tau();
  const ComplexArray intensity = (1.0 / tau.cosh().square()).cast<Complex>();
  const ComplexArray v = response_convolution(intensity, response);
  using boost::math::quadrature::gauss_kronrod;
  for (int n : {300, 480, 512, 530, 600, 700}) {
    const double t = tau[n];
    auto integrand = [&](double s) { return raman_response(m, s) / std::pow(std::cosh(t - s), 2); };
    double err = 0.0;
    const double delayed = gauss_kronrod<double, 61>::integrate(integrand, 0.0, 60.0, 30, 1e-14, &err);
    const double expected = 0.6 / std::pow(std::cosh(t), 2) + delayed;
    CHECK(std::abs(v[n].real() - expected) < 1e-8);
    CHECK(std::abs(v[n].imag()) < 1e-12);
  }
}

TEST_CASE("strang splitting is second order") {
  const ResponseModel raman = normalize_total_response(ResponseModel({{1.0, 8.0, 1.5}}, 0.5), 0.18);
  auto solve = [&](double dz) {
    NoiseSpec s = deterministic(256, 30.0, 1.0, dz);
    s.response = raman;
    return run_to_end(Propagator(s), sech(s.grid, 1.5)).phi;
  };
  const ComplexArray ref = solve(1.0 / 6400);
  const double e1 = (solve(1.0 / 50) - ref).abs().maxCoeff();
  const double e2 = (solve(1.0 / 100) - ref).abs().maxCoeff();
  const double e3 = (solve(1.0 / 200) - ref).abs().maxCoeff();
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(std::log2(e2 / e3) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("overflow names the trajectory") {
  const Propagator p(deterministic(128, 20.0, 1.0, 1e-2));
  PropagationSettings settings;
  settings.checkpoints = {1.0};
  settings.overflow_bound = 0.5;
  try {
    p.propagate(p.initial_state(sech(p.grid()), 17), 17, settings);
    FAIL("expected Overflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Overflow);
    CHECK(std::string(e.what()).find("trajectory 17") != std::string::npos);
  }
}

TEST_CASE("checkpoints must be whole steps inside the run") {
  const Propagator p(deterministic(128, 20.0, 1.0, 1e-2));
  CHECK(p.checkpoint_steps({0.0, 0.5, 1.0}) == std::vector<long long>{0, 50, 100});
  CHECK_THROWS_AS(p.checkpoint_steps({0.505}), Error);
  CHECK_THROWS_AS(p.checkpoint_steps({1.5}), Error);
  CHECK_THROWS_AS(p.checkpoint_steps({0.5, 0.5}), Error);
}

TEST_CASE("edge energy is reported") {
  const Propagator p(deterministic(128, 6.0, 0.1, 1e-2));
  PropagationSettings settings;
  settings.checkpoints = {0.1};
  const auto rec = p.propagate(p.initial_state(sech(p.grid()), 0), 0, settings);
  REQUIRE(rec.warnings.size() == 1);
  CHECK(rec.warnings[0].find("window edges") != std::string::npos);
}

TEST_CASE("checkpoint files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "fibernoise_test_checkpoints";
  std::filesystem::create_directories(dir);
  NoiseSpec s = deterministic(64, 10.0, 0.1, 1e-2, Representation::PositiveP);
  const Propagator p(s);
  PropagationSettings settings;
  settings.checkpoints = {0.0, 0.05, 0.1};
  const auto rec = p.propagate(p.initial_state(sech(p.grid()), 3), 3, settings);
  {
    CheckpointWriter w(dir / "f.bin", dir / "f.tsv", p.grid(), true);
    for (const auto& snap : rec.snapshots) w.write(3, snap);
  }
  const auto back = read_checkpoints(dir / "f.bin");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].trajectory == 3);
    CHECK(back[i].state.zeta == rec.snapshots[i].zeta);
    CHECK((back[i].state.phi == rec.snapshots[i].phi).all());
    CHECK((back[i].state.phi_plus == rec.snapshots[i].phi_plus).all());
  }
  std::filesystem::remove_all(dir);
}
