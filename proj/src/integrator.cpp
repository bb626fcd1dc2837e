#include "fibernoise/integrator.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "fibernoise/errors.hpp"
#include "fibernoise/fft.hpp"

namespace fibernoise {
namespace {

constexpr Complex I{0.0, 1.0};

void linear_multipliers(const SimulationGrid& grid, const GainLossProfile& profile, double h, ComplexArray& phi,
                        ComplexArray& plus) {
  const RealArray omega = grid.omega();
  const ComplexArray g = linear_response_spectrum(profile, omega);
  const double s = dispersion_factor(grid.dispersion);
  const int m = grid.modes;
  phi.resize(m);
  plus.resize(m);
  for (int k = 0; k < m; ++k) {
    const double w2 = omega[k] * omega[k];
    // The phi+ filter is the transform of g*(tau), i.e. conj g~(-W).
    const Complex g_mirror = std::conj(g[grid.mirror(k)]);
    phi[k] = std::exp((-s * I * 0.5 * w2 - g[k]) * h);
    plus[k] = std::exp((s * I * 0.5 * w2 - g_mirror) * h);
  }
}

void check_finite(const FieldState& state, double bound) {
  const double peak = max_intensity(state);
  if (!(peak <= bound)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "field overflow at z = %.9g (max |phi phi+| = %.6g, bound %.6g)", state.zeta,
                  peak, bound);
    fail(ErrorKind::Overflow, buf);
  }
}

}  // namespace

void linear_half_step(FieldState& state, const SimulationGrid& grid, const GainLossProfile& profile, double h) {
  ComplexArray phi, plus;
  linear_multipliers(grid, profile, h, phi, plus);
  const Fft fft(grid.modes);
  state.phi = fft.to_time(fft.to_spectrum(state.phi) * phi);
  if (state.positive_p()) state.phi_plus = fft.to_time(fft.to_spectrum(state.phi_plus) * plus);
}

ComplexArray response_on_grid(const ResponseModel& model, const SimulationGrid& grid) {
  ComplexArray h = response_spectrum(model, grid.omega());
  h[grid.modes / 2] = h[grid.modes / 2].real();
  return h;
}

ComplexArray response_convolution(const ComplexArray& intensity, const ComplexArray& response) {
  const Fft fft(static_cast<int>(intensity.size()));
  return fft.to_time(fft.to_spectrum(intensity) * response);
}

double max_intensity(const FieldState& state) {
  if (state.positive_p()) return (state.phi * state.phi_plus).abs().maxCoeff();
  return state.phi.abs2().maxCoeff();
}

double field_norm(const FieldState& state, double dtau) {
  if (state.positive_p()) return (state.phi * state.phi_plus).real().sum() * dtau;
  return state.phi.abs2().sum() * dtau;
}

void nonlinear_step(FieldState& state, const ComplexArray& response, const RamanNoise& noise, double dz,
                    double overflow_bound) {
  const bool plus = state.positive_p();
  const ComplexArray intensity = plus ? ComplexArray(state.phi_plus * state.phi) : ComplexArray(state.phi.abs2());
  ComplexArray potential;
  // An instantaneous response needs no convolution.
  if ((response == response[0]).all() && response[0].imag() == 0.0)
    potential = intensity * response[0].real();
  else
    potential = response_convolution(intensity, response);
  if (!plus) potential = potential.real().cast<Complex>();

  if (noise.raman.size() > 0)
    state.phi *= ((potential + noise.raman) * (I * dz)).exp();
  else
    state.phi *= (potential * (I * dz)).exp();
  if (plus) {
    if (noise.raman_plus.size() > 0)
      state.phi_plus *= ((potential + noise.raman_plus) * (-I * dz)).exp();
    else
      state.phi_plus *= (potential * (-I * dz)).exp();
  }
  check_finite(state, overflow_bound);
}

Propagator::Propagator(NoiseSpec spec) : noise_(std::move(spec)) {
  const auto& s = noise_.spec();
  s.grid.validate();
  response_ = response_on_grid(s.response, s.grid);
  linear_multipliers(s.grid, s.profile, 0.5 * s.grid.dz, linear_phi_, linear_plus_);

  if (!s.profile.dispersive.is_zero()) {
    // A causal linear response ties g' to g; user-supplied g' is accepted but checked.
    const RealArray omega = s.grid.omega();
    const ComplexArray g = linear_response_spectrum(s.profile, omega);
    const RealArray re = g.real();
    const RealArray dispersive = g.imag() - s.profile.detuning_offset;
    const RealArray expected = kramers_kronig(re - re.mean(), false);
    const double scale = std::max(dispersive.abs().maxCoeff(), re.abs().maxCoeff());
    if ((expected - dispersive).abs().maxCoeff() > 1e-3 * scale)
      warnings_.push_back("dispersive part g' is not Kramers-Kronig consistent with the gain/loss curves");
  }
}

FieldState Propagator::initial_state(const ComplexArray& mean_field, std::uint64_t trajectory) const {
  NormalStream rng(grid().seed, trajectory, 0, StreamPurpose::InitialField);
  return noise_.sample_initial_field(mean_field, rng);
}

void Propagator::apply_linear(FieldState& state) const {
  const Fft fft(grid().modes);
  ComplexArray spectrum(grid().modes);
  fft.to_spectrum(state.phi, spectrum);
  spectrum *= linear_phi_;
  fft.to_time(spectrum, state.phi);
  if (state.positive_p()) {
    fft.to_spectrum(state.phi_plus, spectrum);
    spectrum *= linear_plus_;
    fft.to_time(spectrum, state.phi_plus);
  }
}

void Propagator::step(FieldState& state, std::uint64_t trajectory, long long step_index) const {
  const auto& g = grid();
  const auto& spec = noise_.spec();
  const auto index = static_cast<std::uint64_t>(step_index);
  apply_linear(state);

  RamanNoise raman;
  if (noise_.raman_active()) {
    NormalStream rng(g.seed, trajectory, index, StreamPurpose::Raman, g.noise_substeps);
    if (spec.representation == Representation::Wigner)
      raman.raman = noise_.sample_raman_noise_wigner(g.dz, rng).cast<Complex>();
    else
      raman = noise_.sample_raman_noise_posp(g.dz, rng);
  }
  nonlinear_step(state, response_, raman, g.dz, std::numeric_limits<double>::infinity());

  if (noise_.additive_active()) {
    NormalStream rng(g.seed, trajectory, index, StreamPurpose::Additive, g.noise_substeps);
    const ComplexArray gamma = noise_.sample_additive_noise(g.dz, rng);
    state.phi += gamma * g.dz;
    if (state.positive_p()) state.phi_plus += gamma.conjugate() * g.dz;
  }
  apply_linear(state);
  state.zeta = g.dz * static_cast<double>(step_index + 1);
}

std::vector<long long> Propagator::checkpoint_steps(const std::vector<double>& checkpoints) const {
  const auto& g = grid();
  const long long total = g.steps();
  std::vector<long long> steps;
  for (double z : checkpoints) {
    const double n = z / g.dz;
    const double r = std::round(n);
    if (!(z >= 0.0) || std::abs(n - r) > 1e-9 * std::max(1.0, n) || r > static_cast<double>(total))
      fail(ErrorKind::InvalidArgument, "checkpoint z = " + std::to_string(z) +
                                           " is not a whole number of steps within [0, z_end]");
    const auto s = static_cast<long long>(r);
    if (!steps.empty() && s <= steps.back())
      fail(ErrorKind::InvalidArgument, "checkpoints must be strictly increasing");
    steps.push_back(s);
  }
  return steps;
}

TrajectoryRecord Propagator::propagate(FieldState state, std::uint64_t trajectory,
                                       const PropagationSettings& settings) const {
  const auto& g = grid();
  const auto steps = checkpoint_steps(settings.checkpoints);
  const long long total = g.steps();
  const double dtau = g.dtau();
  const bool wigner = !state.positive_p();
  require(state.phi.size() == g.modes, "field length must equal the mode count");
  require(wigner == (noise_.spec().representation == Representation::Wigner),
          "field state does not match the run representation");

  TrajectoryRecord record;
  record.trajectory = trajectory;
  if (settings.record_diagnostics) record.diagnostics.reserve(static_cast<std::size_t>(total) + 1);

  // Vacuum energy a Wigner trajectory carries in every cell, subtracted by the edge guard.
  const double vacuum_cell =
      wigner && noise_.spec().initial ? 0.5 / noise_.spec().photon_number : 0.0;
  const int edge_cells = std::max(1, g.modes / 20);
  bool edge_warned = false;
  auto snapshot = [&]() {
    record.snapshots.push_back(state);
    const RealArray density = wigner ? RealArray(state.phi.abs2()) : RealArray((state.phi * state.phi_plus).real());
    const double total_energy = density.sum() * dtau - vacuum_cell * g.modes;
    const double edge = (density.head(edge_cells).sum() + density.tail(edge_cells).sum()) * dtau -
                        vacuum_cell * 2 * edge_cells;
    if (!edge_warned && total_energy > 0.0 && edge > settings.edge_energy_warning * total_energy) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.3g of the energy is within 5%% of the window edges at z = %.6g",
                    edge / total_energy, state.zeta);
      record.warnings.emplace_back(buf);
      edge_warned = true;
    }
  };
  auto diagnose = [&]() {
    if (settings.record_diagnostics)
      record.diagnostics.push_back({state.zeta, field_norm(state, dtau), state.phi.abs().maxCoeff()});
  };

  std::size_t next = 0;
  state.zeta = 0.0;
  diagnose();
  if (next < steps.size() && steps[next] == 0) {
    snapshot();
    ++next;
  }
  for (long long s = 0; s < total; ++s) {
    step(state, trajectory, s);
    const double peak = max_intensity(state);
    if (!(peak <= settings.overflow_bound)) {
      char buf[200];
      std::snprintf(buf, sizeof(buf), "trajectory %llu diverged at z = %.9g (max |phi phi+| = %.6g, bound %.6g)",
                    static_cast<unsigned long long>(trajectory), state.zeta, peak, settings.overflow_bound);
      fail(ErrorKind::Overflow, buf);
    }
    diagnose();
    if (next < steps.size() && steps[next] == s + 1) {
      snapshot();
      ++next;
    }
  }
  return record;
}

CheckpointWriter::CheckpointWriter(const std::filesystem::path& data, const std::filesystem::path& index,
                                   const SimulationGrid& grid, bool positive_p)
    : data_path_(data), index_path_(index), modes_(grid.modes), positive_p_(positive_p) {
  data_ = std::fopen(data.string().c_str(), "wb");
  index_ = std::fopen(index.string().c_str(), "wb");
  if (!data_ || !index_) {
    close();
    fail(ErrorKind::Io, "cannot create checkpoint files in '" + data.parent_path().string() + "'");
  }
  const char magic[8] = {'F', 'N', 'F', 'I', 'E', 'L', 'D', '1'};
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(modes_), positive_p ? 1u : 0u};
  const double scales[2] = {grid.window, grid.dz};
  std::fwrite(magic, 1, 8, data_);
  std::fwrite(header, sizeof(std::uint32_t), 2, data_);
  std::fwrite(scales, sizeof(double), 2, data_);
  offset_ = 8 + 2 * 4 + 2 * 8;
  std::fputs("trajectory\tzeta\toffset\n", index_);
}

CheckpointWriter::~CheckpointWriter() { close(); }

void CheckpointWriter::write(std::uint64_t trajectory, const FieldState& state) {
  require(state.phi.size() == modes_ && state.positive_p() == positive_p_, "checkpoint field does not match header");
  std::fwrite(&trajectory, sizeof trajectory, 1, data_);
  std::fwrite(&state.zeta, sizeof(double), 1, data_);
  // std::complex<double> is laid out as (re, im).
  std::fwrite(state.phi.data(), sizeof(Complex), static_cast<std::size_t>(modes_), data_);
  if (positive_p_) std::fwrite(state.phi_plus.data(), sizeof(Complex), static_cast<std::size_t>(modes_), data_);
  std::fprintf(index_, "%llu\t%.17g\t%lld\n", static_cast<unsigned long long>(trajectory), state.zeta, offset_);
  offset_ += 16 + static_cast<long long>(modes_) * 16 * (positive_p_ ? 2 : 1);
  if (std::ferror(data_) || std::ferror(index_)) fail(ErrorKind::Io, "write failed for '" + data_path_.string() + "'");
}

void CheckpointWriter::close() {
  bool failed = false;
  if (data_) failed |= std::fclose(data_) != 0;
  if (index_) failed |= std::fclose(index_) != 0;
  data_ = index_ = nullptr;
  if (failed) fail(ErrorKind::Io, "closing checkpoint files failed");
}

std::vector<CheckpointRecord> read_checkpoints(const std::filesystem::path& data) {
  std::FILE* f = std::fopen(data.string().c_str(), "rb");
  if (!f) fail(ErrorKind::Io, "cannot open '" + data.string() + "'");
  char magic[8];
  std::uint32_t header[2];
  double scales[2];
  const bool ok = std::fread(magic, 1, 8, f) == 8 && std::memcmp(magic, "FNFIELD1", 8) == 0 &&
                  std::fread(header, sizeof(std::uint32_t), 2, f) == 2 && std::fread(scales, sizeof(double), 2, f) == 2;
  if (!ok) {
    std::fclose(f);
    fail(ErrorKind::Io, "'" + data.string() + "' is not a checkpoint file");
  }
  const auto modes = static_cast<Eigen::Index>(header[0]);
  std::vector<CheckpointRecord> out;
  while (true) {
    CheckpointRecord r;
    if (std::fread(&r.trajectory, sizeof r.trajectory, 1, f) != 1) break;
    r.state.phi.resize(modes);
    bool good = std::fread(&r.state.zeta, sizeof(double), 1, f) == 1 &&
                std::fread(r.state.phi.data(), sizeof(Complex), modes, f) == static_cast<std::size_t>(modes);
    if (good && header[1]) {
      r.state.phi_plus.resize(modes);
      good = std::fread(r.state.phi_plus.data(), sizeof(Complex), modes, f) == static_cast<std::size_t>(modes);
    }
    if (!good) {
      std::fclose(f);
      fail(ErrorKind::Io, "truncated checkpoint record in '" + data.string() + "'");
    }
    out.push_back(std::move(r));
  }
  std::fclose(f);
  return out;
}

}  // namespace fibernoise
