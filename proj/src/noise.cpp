#include "fibernoise/noise.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"
#include "fibernoise/fft.hpp"

namespace fibernoise {
namespace {

constexpr Complex I{0.0, 1.0};

const double sqrt_two_pi = std::sqrt(2.0 * constants::pi);

}  // namespace

void NoiseSpec::validate() const {
  grid.validate();
  profile.validate();
  fiber.validate();
  require(std::isfinite(photon_number) && photon_number > 0.0, "photon number scale must be positive");
  require(std::isfinite(variance_scale) && variance_scale >= 0.0, "noise variance scale must be >= 0");
}

Eigen::MatrixXd real_covariance_from_moments(const Eigen::MatrixXcd& moments) {
  const Eigen::Index n = moments.rows();
  require(moments.cols() == n, "moment matrix must be square");
  const Eigen::MatrixXcd s = 0.5 * (moments + moments.transpose());
  // S S^H is Hermitian and positive semidefinite; its square root is the smallest
  // E[z z^H] for which [[H, S], [S^*, H^*]] is a valid covariance.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(s * s.adjoint());
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXcd h = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();

  Eigen::MatrixXd c(2 * n, 2 * n);
  c.topLeftCorner(n, n) = 0.5 * (h + s).real();
  c.bottomRightCorner(n, n) = 0.5 * (h - s).real();
  c.topRightCorner(n, n) = 0.5 * (s.imag() - h.imag());
  c.bottomLeftCorner(n, n) = 0.5 * (s.imag() + h.imag());
  return 0.5 * (c + c.transpose());
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& covariance) {
  require(covariance.rows() == covariance.cols(), "covariance must be square");
  if (!covariance.allFinite()) fail(ErrorKind::NonPositiveCovariance, "noise covariance has non-finite entries");
  const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const auto& lambda = eig.eigenvalues();
  const double largest = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() < -1e-10 * std::max(1.0, largest)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "noise covariance is not positive semidefinite (min eigenvalue %.6g, max %.6g)",
                  lambda.minCoeff(), lambda.maxCoeff());
    fail(ErrorKind::NonPositiveCovariance, buf);
  }
  return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

NoiseGenerator::NoiseGenerator(NoiseSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto& grid = spec_.grid;
  const int m = grid.modes;
  const double n = spec_.photon_number;
  omega_ = grid.omega();

  const RealArray gain = spec_.profile.gain(omega_);
  const RealArray loss = spec_.profile.loss(omega_);
  if (spec_.representation == Representation::Wigner)
    additive_density_ = (gain + loss) / (2.0 * n);
  else
    additive_density_ = gain / n;
  additive_zero_ = (additive_density_ == 0.0).all();

  raman_density_.resize(m);
  raman_pair_moment_.resize(m);
  raman_cross_moment_.resize(m);
  for (int k = 0; k < m; ++k) {
    const double w = omega_[k];
    const double a_r = raman_gain(spec_.response, w);
    const double thermal = thermal_raman_gain(spec_.response, spec_.fiber, w);
    const double h_real = response_spectrum(spec_.response, w).real();
    raman_density_[k] = (thermal + 0.5 * a_r) / n;
    raman_pair_moment_[k] = Complex(thermal + 0.5 * a_r, -h_real) / n;
    double step = w < 0.0 ? 1.0 : 0.0;
    if (k == m / 2) step = 0.5;
    raman_cross_moment_[k] = (thermal + step * a_r) / n;
  }
  raman_zero_ = spec_.representation == Representation::Wigner
                    ? (raman_density_ == 0.0).all()
                    : ((raman_pair_moment_.abs() == 0.0).all() && (raman_cross_moment_ == 0.0).all());

  if (spec_.representation == Representation::PositiveP && spec_.raman) {
    // Factors are built in units of 1/n so the eigenvalue tolerance is scale-free.
    auto add_group = [&](int k, int mirror) {
      PairCovariance p;
      p.mode = k;
      p.mirror = mirror;
      const Complex a = raman_pair_moment_[k] * n;
      if (k == mirror) {
        const double c = raman_cross_moment_[k] * n;
        p.moments.resize(2, 2);
        p.moments << a, c, c, std::conj(a);
      } else {
        p.moments = Eigen::MatrixXcd::Zero(4, 4);
        p.moments(0, 1) = p.moments(1, 0) = a;
        p.moments(2, 3) = p.moments(3, 2) = std::conj(a);
        // Gamma+ at -W pairs with Gamma at W: <b_m a_k> = c(W_k), <b_k a_m> = c(W_m).
        p.moments(0, 3) = p.moments(3, 0) = raman_cross_moment_[k] * n;
        p.moments(1, 2) = p.moments(2, 1) = raman_cross_moment_[mirror] * n;
      }
      p.covariance = real_covariance_from_moments(p.moments);
      try {
        p.factor = covariance_factor(p.covariance);
      } catch (const Error& e) {
        fail(e.kind(), std::string(e.what()) + " at mode W = " + std::to_string(omega_[k]));
      }
      pairs_.push_back(std::move(p));
    };
    add_group(0, 0);
    for (int k = 1; k < m / 2; ++k) add_group(k, m - k);
    add_group(m / 2, m / 2);
  }
}

ComplexArray NoiseGenerator::to_time_domain(const ComplexArray& amplitudes) const {
  const auto& grid = spec_.grid;
  return Fft(grid.modes).to_time(amplitudes) * (grid.modes * grid.domega() / sqrt_two_pi);
}

ComplexArray NoiseGenerator::to_amplitudes(const ComplexArray& field) const {
  return Fft(spec_.grid.modes).to_spectrum(field) * (spec_.grid.dtau() / sqrt_two_pi);
}

FieldState NoiseGenerator::sample_initial_field(const ComplexArray& mean_field, NormalStream& rng) const {
  require(mean_field.size() == spec_.grid.modes, "mean field length must equal the mode count");
  FieldState state;
  state.phi = mean_field;
  if (spec_.representation == Representation::PositiveP) {
    state.phi_plus = mean_field.conjugate();
    return state;
  }
  if (!spec_.initial) return state;
  const double sigma = std::sqrt(spec_.variance_scale / (2.0 * spec_.photon_number * spec_.grid.dtau()));
  for (Eigen::Index i = 0; i < state.phi.size(); ++i) state.phi[i] += sigma * rng.next_circular();
  return state;
}

ComplexArray NoiseGenerator::sample_additive_noise(double dz, NormalStream& rng) const {
  const int m = spec_.grid.modes;
  if (!additive_active()) return ComplexArray::Zero(m);
  const double norm = spec_.variance_scale / (spec_.grid.domega() * dz);
  ComplexArray amplitudes(m);
  for (int k = 0; k < m; ++k) amplitudes[k] = std::sqrt(norm * additive_density_[k]) * rng.next_circular();
  return to_time_domain(amplitudes);
}

RealArray NoiseGenerator::sample_raman_noise_wigner(double dz, NormalStream& rng) const {
  const int m = spec_.grid.modes;
  require(spec_.representation == Representation::Wigner, "Wigner Raman noise requested from a positive-P spec");
  if (!raman_active()) return RealArray::Zero(m);
  const double norm = spec_.variance_scale / (spec_.grid.domega() * dz);
  ComplexArray amplitudes(m);
  amplitudes[0] = std::sqrt(norm * raman_density_[0]) * rng.next();
  for (int k = 1; k < m / 2; ++k) {
    const Complex c = std::sqrt(norm * raman_density_[k]) * rng.next_circular();
    amplitudes[k] = c;
    amplitudes[m - k] = std::conj(c);
  }
  amplitudes[m / 2] = std::sqrt(norm * raman_density_[m / 2]) * rng.next();
  return to_time_domain(amplitudes).real();
}

RamanNoise NoiseGenerator::sample_raman_noise_posp(double dz, NormalStream& rng) const {
  const int m = spec_.grid.modes;
  require(spec_.representation == Representation::PositiveP, "positive-P Raman noise requested from a Wigner spec");
  RamanNoise out;
  if (!raman_active()) {
    out.raman = ComplexArray::Zero(m);
    out.raman_plus = ComplexArray::Zero(m);
    return out;
  }
  const double scale = std::sqrt(spec_.variance_scale / (spec_.photon_number * spec_.grid.domega() * dz));
  ComplexArray a(m), b(m);
  Eigen::VectorXd xi;
  for (const auto& p : pairs_) {
    xi.resize(p.factor.cols());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.next();
    const Eigen::VectorXd v = scale * (p.factor * xi);
    if (p.mode == p.mirror) {
      a[p.mode] = {v[0], v[2]};
      b[p.mode] = {v[1], v[3]};
    } else {
      a[p.mode] = {v[0], v[4]};
      a[p.mirror] = {v[1], v[5]};
      b[p.mode] = {v[2], v[6]};
      b[p.mirror] = {v[3], v[7]};
    }
  }
  out.raman = to_time_domain(a);
  out.raman_plus = to_time_domain(b);
  return out;
}

std::string_view to_string(NoiseSource source) {
  switch (source) {
    case NoiseSource::InitialField: return "initial-field";
    case NoiseSource::WignerAdditive: return "wigner-additive";
    case NoiseSource::PositivePAdditive: return "positive-p-additive";
    case NoiseSource::WignerRaman: return "wigner-raman";
    case NoiseSource::PositivePRaman: return "positive-p-raman";
  }
  return "unknown";
}

bool NoiseVerification::passed() const {
  for (const auto& t : moments)
    if (t.fraction_within < pass_fraction) return false;
  return !moments.empty();
}

namespace {

/// Running sums of one complex product per bin.
struct MomentAccumulator {
  std::string name;
  RealArray coordinate;
  ComplexArray target;
  ComplexArray sum;
  RealArray sum_sq_re, sum_sq_im;
  double normalization = 1.0;

  MomentAccumulator(std::string n, const RealArray& coord, ComplexArray tgt, double norm)
      : name(std::move(n)), coordinate(coord), target(std::move(tgt)), normalization(norm) {
    const auto size = coordinate.size();
    sum = ComplexArray::Zero(size);
    sum_sq_re = RealArray::Zero(size);
    sum_sq_im = RealArray::Zero(size);
  }

  void add(const ComplexArray& values) {
    sum += values;
    sum_sq_re += values.real().square();
    sum_sq_im += values.imag().square();
  }

  MomentTable finish(int draws, double z_limit) const {
    MomentTable t;
    t.name = name;
    t.coordinate = coordinate;
    t.target = target;
    const double nd = draws;
    const ComplexArray mean = sum / nd;
    t.empirical = mean * normalization;
    auto se = [&](const RealArray& sq, const RealArray& m) {
      const RealArray var = ((sq / nd - m.square()) * nd / (nd - 1.0)).max(0.0);
      return RealArray((var / nd).sqrt() * normalization);
    };
    t.se_real = se(sum_sq_re, mean.real());
    t.se_imag = se(sum_sq_im, mean.imag());
    t.z_score.resize(coordinate.size());
    t.bins_within = 0;
    for (Eigen::Index i = 0; i < coordinate.size(); ++i) {
      const double diff = std::abs(t.empirical[i] - t.target[i]);
      const double s = std::hypot(t.se_real[i], t.se_imag[i]);
      double z = 0.0;
      if (s > 0.0) z = diff / s;
      else if (diff > 1e-14 * std::max(1.0, std::abs(t.target[i]))) z = std::numeric_limits<double>::infinity();
      t.z_score[i] = z;
      if (z <= z_limit) ++t.bins_within;
    }
    t.fraction_within = static_cast<double>(t.bins_within) / static_cast<double>(coordinate.size());
    return t;
  }
};

ComplexArray mirrored(const ComplexArray& x) {
  const auto m = x.size();
  ComplexArray out(m);
  out[0] = x[0];
  for (Eigen::Index k = 1; k < m; ++k) out[k] = x[m - k];
  return out;
}

}  // namespace

NoiseVerification verify_noise_correlations(const NoiseGenerator& generator, NoiseSource source, int draws,
                                            double dz, std::uint64_t seed) {
  require(draws >= 100, "noise verification needs at least 100 draws");
  require(dz > 0.0, "noise verification step must be positive");
  const auto& spec = generator.spec();
  const auto& grid = spec.grid;
  const bool wants_wigner = source == NoiseSource::InitialField || source == NoiseSource::WignerAdditive ||
                            source == NoiseSource::WignerRaman;
  require(wants_wigner == (spec.representation == Representation::Wigner),
          "noise source " + std::string(to_string(source)) + " does not match the generator representation");

  const RealArray omega = grid.omega();
  const double spectral_norm = grid.domega() * dz;
  const auto m = grid.modes;
  const ComplexArray zero = ComplexArray::Zero(m);
  std::vector<MomentAccumulator> acc;

  switch (source) {
    case NoiseSource::InitialField: {
      const double target = spec.initial ? 1.0 / (2.0 * spec.photon_number * grid.dtau()) : 0.0;
      acc.emplace_back("variance", grid.tau(), ComplexArray::Constant(m, target), 1.0);
      acc.emplace_back("mean", grid.tau(), zero, 1.0);
      break;
    }
    case NoiseSource::WignerAdditive:
    case NoiseSource::PositivePAdditive: {
      const ComplexArray target = spec.additive ? generator.additive_density().cast<Complex>() : zero;
      acc.emplace_back("power", omega, target, spectral_norm);
      acc.emplace_back("mean", omega, zero, std::sqrt(spectral_norm));
      break;
    }
    case NoiseSource::WignerRaman: {
      const ComplexArray target = spec.raman ? generator.raman_density().cast<Complex>() : zero;
      acc.emplace_back("power", omega, target, spectral_norm);
      acc.emplace_back("mean", omega, zero, std::sqrt(spectral_norm));
      break;
    }
    case NoiseSource::PositivePRaman: {
      const bool on = spec.raman;
      acc.emplace_back("pair", omega, on ? generator.raman_pair_moment() : zero, spectral_norm);
      acc.emplace_back("pair_plus", omega, on ? ComplexArray(generator.raman_pair_moment().conjugate()) : zero,
                       spectral_norm);
      acc.emplace_back("cross", omega, on ? generator.raman_cross_moment().cast<Complex>() : zero, spectral_norm);
      acc.emplace_back("mean", omega, zero, std::sqrt(spectral_norm));
      acc.emplace_back("mean_plus", omega, zero, std::sqrt(spectral_norm));
      break;
    }
  }

  const ComplexArray mean_field = ComplexArray::Zero(m);
  for (int d = 0; d < draws; ++d) {
    NormalStream rng(seed, static_cast<std::uint64_t>(d), 0, StreamPurpose::Verification);
    switch (source) {
      case NoiseSource::InitialField: {
        const ComplexArray x = generator.sample_initial_field(mean_field, rng).phi;
        acc[0].add(x.abs2().cast<Complex>());
        acc[1].add(x);
        break;
      }
      case NoiseSource::WignerAdditive:
      case NoiseSource::PositivePAdditive: {
        const ComplexArray a = generator.to_amplitudes(generator.sample_additive_noise(dz, rng));
        acc[0].add(a.abs2().cast<Complex>());
        acc[1].add(a);
        break;
      }
      case NoiseSource::WignerRaman: {
        const ComplexArray a =
            generator.to_amplitudes(generator.sample_raman_noise_wigner(dz, rng).cast<Complex>());
        acc[0].add(a.abs2().cast<Complex>());
        acc[1].add(a);
        break;
      }
      case NoiseSource::PositivePRaman: {
        const RamanNoise r = generator.sample_raman_noise_posp(dz, rng);
        const ComplexArray a = generator.to_amplitudes(r.raman);
        const ComplexArray b = generator.to_amplitudes(r.raman_plus);
        acc[0].add(a * mirrored(a));
        acc[1].add(b * mirrored(b));
        acc[2].add(mirrored(b) * a);
        acc[3].add(a);
        acc[4].add(b);
        break;
      }
    }
  }

  NoiseVerification report;
  report.source = source;
  report.draws = draws;
  for (const auto& a : acc) report.moments.push_back(a.finish(draws, report.z_limit));
  return report;
}

void write_moment_table(const std::filesystem::path& path, const MomentTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << "coordinate\ttarget_re\ttarget_im\tempirical_re\tempirical_im\tse_re\tse_im\tz\n";
  char line[512];
  for (Eigen::Index i = 0; i < table.coordinate.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.6g\n", table.coordinate[i],
                  table.target[i].real(), table.target[i].imag(), table.empirical[i].real(),
                  table.empirical[i].imag(), table.se_real[i], table.se_imag[i], table.z_score[i]);
    out << line;
  }
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace fibernoise
