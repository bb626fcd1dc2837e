#include "fibernoise/observables.hpp"

#include <cmath>
#include <cstdio>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"
#include "fibernoise/fft.hpp"

namespace fibernoise {
namespace {

double vacuum_shift(Ordering raw, Ordering wanted) {
  if (wanted == Ordering::Antinormal)
    fail(ErrorKind::UnsupportedOrdering, "antinormally ordered moments are not supported");
  if (raw == wanted) return 0.0;
  return raw == Ordering::Symmetric ? -0.5 : 0.5;
}

RealArray standard_error(const RealArray& m2, long long n) {
  if (n < 2) return RealArray::Zero(m2.size());
  const double nd = static_cast<double>(n);
  return (m2.max(0.0) / (nd * (nd - 1.0))).sqrt();
}

const CheckpointMoments& checkpoint_at(const EnsembleResult& r, int checkpoint) {
  require(checkpoint >= 0 && checkpoint < static_cast<int>(r.checkpoints.size()), "checkpoint index out of range");
  require(r.trajectory_count >= 1, "ensemble holds no trajectories");
  return r.checkpoints[static_cast<std::size_t>(checkpoint)];
}

/// FFT order to ascending frequency.
RealArray ascending(const RealArray& x) {
  const auto m = x.size();
  RealArray out(m);
  out << x.tail(m / 2), x.head(m / 2);
  return out;
}

}  // namespace

LocalOscillator make_local_oscillator(std::string name, const ComplexArray& mode, double dtau) {
  const double norm = mode.abs2().sum() * dtau;
  require(norm > 0.0 && std::isfinite(norm), "local oscillator '" + name + "' has zero norm");
  return {std::move(name), mode / std::sqrt(norm)};
}

ComplexArray mode_photon_numbers(const FieldState& state, double photon_number, const SimulationGrid& grid) {
  const Fft fft(grid.modes);
  const double scale = std::sqrt(photon_number / grid.window) * grid.dtau();
  const ComplexArray a = fft.to_spectrum(state.phi) * scale;
  if (!state.positive_p()) return a.abs2().cast<Complex>();
  // a+_k = scale * sum_n phi+_n exp(-i W_k tau_n)
  const ComplexArray a_plus = fft.to_time(state.phi_plus) * (scale * grid.modes);
  return a_plus * a;
}

RunningMoments::RunningMoments(Eigen::Index size)
    : mean(ComplexArray::Zero(size)), m2_re(RealArray::Zero(size)), m2_im(RealArray::Zero(size)) {}

void RunningMoments::add(const ComplexArray& x) {
  ++count;
  const ComplexArray delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2_re += delta.real() * (x.real() - mean.real());
  m2_im += delta.imag() * (x.imag() - mean.imag());
}

void RunningMoments::merge(const RunningMoments& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count), nb = static_cast<double>(other.count);
  const double n = na + nb;
  const ComplexArray delta = other.mean - mean;
  mean += delta * (nb / n);
  m2_re += other.m2_re + delta.real().square() * (na * nb / n);
  m2_im += other.m2_im + delta.imag().square() * (na * nb / n);
  count += other.count;
}

RealArray RunningMoments::se_real() const { return standard_error(m2_re, count); }
RealArray RunningMoments::se_imag() const { return standard_error(m2_im, count); }

bool RunningMoments::all_finite() const { return mean.allFinite() && m2_re.allFinite() && m2_im.allFinite(); }

void RunningCovariance::add(double x, double y) {
  ++count;
  const double n = static_cast<double>(count);
  const double dx = x - mean_x, dy = y - mean_y;
  mean_x += dx / n;
  mean_y += dy / n;
  m2_x += dx * (x - mean_x);
  m2_y += dy * (y - mean_y);
  c_xy += dx * (y - mean_y);
}

void RunningCovariance::merge(const RunningCovariance& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count), nb = static_cast<double>(other.count);
  const double n = na + nb;
  const double dx = other.mean_x - mean_x, dy = other.mean_y - mean_y;
  mean_x += dx * (nb / n);
  mean_y += dy * (nb / n);
  m2_x += other.m2_x + dx * dx * (na * nb / n);
  m2_y += other.m2_y + dy * dy * (na * nb / n);
  c_xy += other.c_xy + dx * dy * (na * nb / n);
  count += other.count;
}

EnsembleResult::EnsembleResult(const SimulationGrid& g, Representation rep, Ordering raw, double n,
                               std::vector<LocalOscillator> los, const std::vector<double>& zetas)
    : grid(g), representation(rep), raw_ordering(raw), photon_number(n), oscillators(std::move(los)) {
  const int m = grid.modes;
  for (const auto& lo : oscillators) require(lo.mode.size() == m, "local oscillator length must equal the mode count");
  for (double z : zetas) {
    CheckpointMoments c;
    c.zeta = z;
    c.field = RunningMoments(m);
    c.intensity = RunningMoments(m);
    c.photons = RunningMoments(m);
    c.total = RunningMoments(1);
    c.projections.resize(oscillators.size());
    checkpoints.push_back(std::move(c));
  }
}

void EnsembleResult::add(const TrajectoryRecord& record) {
  require(record.snapshots.size() == checkpoints.size(), "trajectory checkpoints do not match the ensemble");
  const double dtau = grid.dtau();
  const RealArray omega = grid.omega();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const FieldState& s = record.snapshots[c];
    auto& m = checkpoints[c];
    m.field.add(s.phi);
    m.intensity.add(s.positive_p() ? ComplexArray(s.phi_plus * s.phi) : ComplexArray(s.phi.abs2()));
    const ComplexArray photons = mode_photon_numbers(s, photon_number, grid);
    m.photons.add(photons);
    const Complex total = photons.sum();
    m.total.add(ComplexArray::Constant(1, total));
    m.first_total.add((omega * photons.real()).sum(), total.real());
    for (std::size_t l = 0; l < oscillators.size(); ++l) {
      const ComplexArray& lo = oscillators[l].mode;
      const Complex q = (lo.conjugate() * s.phi).sum() * dtau;
      const Complex q_plus = s.positive_p() ? Complex((lo * s.phi_plus).sum() * dtau) : std::conj(q);
      m.projections[l].push_back({q, q_plus});
    }
  }
  ++trajectory_count;
  for (const auto& w : record.warnings) add_warning(w);
}

void EnsembleResult::merge(const EnsembleResult& other) {
  require(other.checkpoints.size() == checkpoints.size(), "cannot merge ensembles with different checkpoints");
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    auto& a = checkpoints[c];
    const auto& b = other.checkpoints[c];
    a.field.merge(b.field);
    a.intensity.merge(b.intensity);
    a.photons.merge(b.photons);
    a.total.merge(b.total);
    a.first_total.merge(b.first_total);
    for (std::size_t l = 0; l < a.projections.size(); ++l)
      a.projections[l].insert(a.projections[l].end(), b.projections[l].begin(), b.projections[l].end());
  }
  trajectory_count += other.trajectory_count;
  diverged_count += other.diverged_count;
  divergences.insert(divergences.end(), other.divergences.begin(), other.divergences.end());
  for (const auto& w : other.warnings) add_warning(w);
}

void EnsembleResult::add_warning(const std::string& warning) {
  for (const auto& w : warnings)
    if (w == warning) return;
  warnings.push_back(warning);
}

bool EnsembleResult::all_finite() const {
  for (const auto& c : checkpoints) {
    if (!c.field.all_finite() || !c.intensity.all_finite() || !c.photons.all_finite() || !c.total.all_finite())
      return false;
    const auto& f = c.first_total;
    if (!std::isfinite(f.mean_x) || !std::isfinite(f.m2_x) || !std::isfinite(f.c_xy)) return false;
  }
  return true;
}

ProfileTable photon_flux(const EnsembleResult& r, int checkpoint, Ordering ordering) {
  const auto& m = checkpoint_at(r, checkpoint).intensity;
  const double dtau = r.grid.dtau();
  const double shift = vacuum_shift(r.raw_ordering, ordering) / dtau;
  ProfileTable t;
  t.coordinate = r.grid.tau();
  t.value = m.mean.real() * r.photon_number + shift;
  t.se = m.se_real() * r.photon_number;
  t.imag = m.mean.imag() * r.photon_number;
  t.imag_se = m.se_imag() * r.photon_number;
  return t;
}

ProfileTable optical_spectrum(const EnsembleResult& r, int checkpoint, Ordering ordering) {
  const auto& m = checkpoint_at(r, checkpoint).photons;
  const double shift = vacuum_shift(r.raw_ordering, ordering);
  ProfileTable t;
  t.coordinate = ascending(r.grid.omega());
  t.value = ascending(RealArray(m.mean.real() + shift));
  t.se = ascending(m.se_real());
  t.imag = ascending(RealArray(m.mean.imag()));
  t.imag_se = ascending(m.se_imag());
  return t;
}

Estimate total_photon_number(const EnsembleResult& r, int checkpoint, Ordering ordering) {
  const auto& m = checkpoint_at(r, checkpoint).total;
  const double shift = vacuum_shift(r.raw_ordering, ordering) * r.grid.modes;
  return {m.mean[0].real() + shift, m.se_real()[0]};
}

Estimate mean_frequency(const EnsembleResult& r, int checkpoint) {
  const auto& m = checkpoint_at(r, checkpoint).first_total;
  const double shift = vacuum_shift(r.raw_ordering, Ordering::Normal);
  const RealArray omega = r.grid.omega();
  // Ratio of the first spectral moment to the total, both normally ordered.
  const double num = m.mean_x + shift * omega.sum();
  const double den = m.mean_y + shift * r.grid.modes;
  if (!(den > 0.0)) fail(ErrorKind::ZeroIntensity, "normally ordered intensity is not positive");
  const double ratio = num / den;
  double se = 0.0;
  if (m.count >= 2) {
    const double n = static_cast<double>(m.count);
    const double v = (m.m2_x - 2.0 * ratio * m.c_xy + ratio * ratio * m.m2_y) / (n - 1.0) / (den * den * n);
    se = std::sqrt(std::max(0.0, v));
  }
  return {ratio, se};
}

Estimate quadrature_variance(const EnsembleResult& r, int checkpoint, int oscillator, double theta,
                             Ordering ordering) {
  const auto& m = checkpoint_at(r, checkpoint);
  require(oscillator >= 0 && oscillator < static_cast<int>(r.oscillators.size()), "oscillator index out of range");
  const auto& proj = m.projections[static_cast<std::size_t>(oscillator)];
  const double shift = vacuum_shift(r.raw_ordering, ordering);
  const double n = static_cast<double>(proj.size());
  const Complex phase = std::polar(1.0, -theta);
  const double scale = std::sqrt(0.5 * r.photon_number);
  auto quadrature = [&](const std::array<Complex, 2>& p) { return scale * (phase * p[0] + std::conj(phase) * p[1]); };
  // Two-pass moments about the first sample, so identical samples give exactly zero variance.
  const Complex origin = quadrature(proj.front());
  Complex mean = 0.0;
  for (const auto& p : proj) mean += quadrature(p) - origin;
  mean = origin + mean / n;
  Complex var = 0.0;
  double sum_d = 0.0, sum_d2 = 0.0, sum_s = 0.0, sum_s2 = 0.0, sum_ds = 0.0;
  for (const auto& p : proj) {
    const Complex d = quadrature(p) - mean;
    var += d * d;
    const double s = (d * d).real();
    sum_d += d.real();
    sum_d2 += d.real() * d.real();
    sum_s += s;
    sum_s2 += s * s;
    sum_ds += d.real() * s;
  }
  var /= n;
  double se = 0.0;
  if (proj.size() >= 2) {
    // Delta method on (X, X^2) about the sample mean.
    const double md = sum_d / n, ms = sum_s / n;
    const double var_d = sum_d2 / n - md * md;
    const double var_s = sum_s2 / n - ms * ms;
    const double cov = sum_ds / n - md * ms;
    const double v = var_s - 4.0 * md * cov + 4.0 * md * md * var_d;
    se = std::sqrt(std::max(0.0, v) / (n - 1.0));
  }
  return {var.real() + shift, se};
}

Estimate minimum_quadrature_variance(const EnsembleResult& r, int checkpoint, int oscillator, Ordering ordering,
                                     double* theta) {
  const auto& m = checkpoint_at(r, checkpoint);
  require(oscillator >= 0 && oscillator < static_cast<int>(r.oscillators.size()), "oscillator index out of range");
  const auto& proj = m.projections[static_cast<std::size_t>(oscillator)];
  const double n = static_cast<double>(proj.size());
  Complex mq = 0.0;
  for (const auto& p : proj) mq += p[0];
  mq /= n;
  Complex cqq = 0.0;
  for (const auto& p : proj) cqq += (p[0] - mq) * (p[0] - mq);
  cqq /= n;
  // Var(theta) contains e^{-2 i theta} <dq dq>; it is smallest when that term is real and negative.
  const double best = 0.5 * (std::arg(cqq) - constants::pi);
  if (theta) *theta = best;
  return quadrature_variance(r, checkpoint, oscillator, best, ordering);
}

std::vector<std::string> imaginary_part_diagnostics(const EnsembleResult& r, double z_limit) {
  std::vector<std::string> out;
  if (r.representation != Representation::PositiveP || r.trajectory_count < 2) return out;
  for (int c = 0; c < static_cast<int>(r.checkpoints.size()); ++c) {
    const auto& m = r.checkpoints[static_cast<std::size_t>(c)];
    const auto flux = photon_flux(r, c, Ordering::Normal);
    const auto spectrum = optical_spectrum(r, c, Ordering::Normal);
    auto outliers = [&](const ProfileTable& t) {
      int count = 0;
      for (Eigen::Index i = 0; i < t.imag.size(); ++i)
        if (t.imag_se[i] > 0.0 && std::abs(t.imag[i]) > z_limit * t.imag_se[i]) ++count;
      return static_cast<double>(count) / static_cast<double>(t.imag.size());
    };
    const double total_im = m.total.mean[0].imag();
    const double total_se = m.total.se_imag()[0];
    const double z_total = total_se > 0.0 ? std::abs(total_im) / total_se : 0.0;
    const double of = outliers(flux), os = outliers(spectrum);
    if (z_total > z_limit || of > 0.01 || os > 0.01) {
      char buf[240];
      std::snprintf(buf, sizeof(buf),
                    "imaginary parts of positive-P moments at z = %.6g are not consistent with zero "
                    "(total %.3g standard errors; %.3g%% of flux and %.3g%% of spectrum bins beyond %.3g)",
                    m.zeta, z_total, 100.0 * of, 100.0 * os, z_limit);
      out.emplace_back(buf);
    }
  }
  return out;
}

}  // namespace fibernoise
