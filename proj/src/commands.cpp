#include "fibernoise/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <ostream>

#include "fibernoise/ensemble.hpp"
#include "fibernoise/errors.hpp"
#include "fibernoise/integrator.hpp"
#include "fibernoise/observables.hpp"
#include "fibernoise/ramanfit.hpp"

namespace fibernoise {

namespace fs = std::filesystem;

namespace {

class TableWriter {
 public:
  TableWriter(const fs::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) fail(ErrorKind::Io, "cannot write " + path.string());
    out_ << header << '\n';
  }

  void row(std::initializer_list<double> values) {
    char buf[32];
    bool first = true;
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      if (!first) out_ << '\t';
      out_ << buf;
      first = false;
    }
    out_ << '\n';
  }

  ~TableWriter() noexcept(false) {
    out_.close();
    if (!out_ && std::uncaught_exceptions() == 0) fail(ErrorKind::Io, "error writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

fs::path output_directory(const CommandOptions& options, const RunConfig& config) {
  fs::path dir;
  if (options.out)
    dir = *options.out;
  else if (!config.output.empty())
    dir = config.resolve(config.output);
  else
    fail(ErrorKind::Config, "no output directory: pass --out or set run.output");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::Io, "cannot create output directory " + dir.string());
  return dir;
}

void save(const KeyValueFile& file, const fs::path& path) {
  try {
    file.save(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(ErrorKind::Io, e.what());
  }
}

const double nan = std::numeric_limits<double>::quiet_NaN();

void write_observables(const fs::path& dir, const EnsembleResult& result) {
  const auto& grid = result.grid;
  const RealArray tau = grid.tau();
  const int checkpoints = static_cast<int>(result.checkpoints.size());
  {
    TableWriter t(dir / "flux.tsv", "zeta\ttau\tflux\tse\timag\timag_se");
    for (int c = 0; c < checkpoints; ++c) {
      const auto flux = photon_flux(result, c, Ordering::Normal);
      const double z = result.checkpoints[c].zeta;
      for (Eigen::Index n = 0; n < tau.size(); ++n)
        t.row({z, tau[n], flux.value[n], flux.se[n], flux.imag[n], flux.imag_se[n]});
    }
  }
  {
    TableWriter t(dir / "spectrum.tsv", "zeta\tomega\tnormal\tse\tsymmetric\timag\timag_se");
    for (int c = 0; c < checkpoints; ++c) {
      const auto normal = optical_spectrum(result, c, Ordering::Normal);
      const auto symmetric = optical_spectrum(result, c, Ordering::Symmetric);
      const double z = result.checkpoints[c].zeta;
      for (Eigen::Index k = 0; k < normal.coordinate.size(); ++k)
        t.row({z, normal.coordinate[k], normal.value[k], normal.se[k], symmetric.value[k], normal.imag[k],
               normal.imag_se[k]});
    }
  }
  {
    TableWriter t(dir / "photon_number.tsv", "zeta\tnormal\tse\tsymmetric");
    for (int c = 0; c < checkpoints; ++c) {
      const auto normal = total_photon_number(result, c, Ordering::Normal);
      const auto symmetric = total_photon_number(result, c, Ordering::Symmetric);
      t.row({result.checkpoints[c].zeta, normal.value, normal.se, symmetric.value});
    }
  }
  {
    TableWriter t(dir / "mean_frequency.tsv", "zeta\tmean_frequency\tse");
    for (int c = 0; c < checkpoints; ++c) {
      Estimate e{nan, nan};
      try {
        e = mean_frequency(result, c);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::ZeroIntensity) throw;
      }
      t.row({result.checkpoints[c].zeta, e.value, e.se});
    }
  }
  if (!result.oscillators.empty()) {
    TableWriter t(dir / "quadrature.tsv",
                  "zeta\toscillator\tvariance_symmetric\tvariance_normal\tse\ttheta_min\tmin_symmetric\tmin_normal\tmin_se");
    for (int c = 0; c < checkpoints; ++c)
      for (int o = 0; o < static_cast<int>(result.oscillators.size()); ++o) {
        const auto sym = quadrature_variance(result, c, o, 0.0, Ordering::Symmetric);
        const auto nor = quadrature_variance(result, c, o, 0.0, Ordering::Normal);
        double theta = 0.0;
        const auto min_sym = minimum_quadrature_variance(result, c, o, Ordering::Symmetric, &theta);
        const auto min_nor = minimum_quadrature_variance(result, c, o, Ordering::Normal);
        t.row({result.checkpoints[c].zeta, static_cast<double>(o), sym.value, nor.value, sym.se, theta,
               min_sym.value, min_nor.value, min_sym.se});
      }
  }
}

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
  RunConfig config = options.config ? load_run_config(*options.config) : RunConfig{};
  if (options.seed) config.grid.seed = *options.seed;
  if (options.trajectories) {
    if (*options.trajectories < 1)
      fail(ErrorKind::Config, "--trajectories must be at least 1 (got " + std::to_string(*options.trajectories) + ")");
    config.trajectories = *options.trajectories;
  }
  if (options.threads && *options.threads < 1) fail(ErrorKind::Config, "--threads must be at least 1");
  if (options.input) config.fit_input = options.input->string();
  if (options.terms) config.fit_terms = *options.terms;
  if (options.frequency_unit) config.fit_unit = parse_frequency_unit(*options.frequency_unit);
  config.validate();
  return config;
}

int cmd_run(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  const fs::path dir = output_directory(options, config);
  const NoiseSpec spec = config.noise_spec();
  const auto& grid = spec.grid;

  // The manifest refers to copies of the inputs inside the output directory.
  RunConfig manifest_config = config;
  manifest_config.photon_number = spec.photon_number;
  manifest_config.raman_fraction.reset();
  manifest_config.response = "electronic";
  if (spec.response.has_raman() || spec.response.electronic_fraction() != 1.0) {
    save(to_key_value(spec.response, "response model used by this run, dimensionless units"), dir / "response.model");
    manifest_config.response = "response.model";
  }
  if (config.uses_profile_file()) {
    save(to_key_value(spec.profile), dir / "profile.cfg");
    manifest_config.profile = "profile.cfg";
  }
  KeyValueFile manifest;
  manifest.set("format", std::string("run-manifest"));
  manifest.set("run.output", std::string("."));
  const KeyValueFile body = to_key_value(manifest_config);
  for (const auto& key : body.keys()) manifest.set(key, body.get_string(key));
  const auto units = dimensionless_units(config.fiber);
  manifest.set("derived.t0_s", units.t0);
  manifest.set("derived.x0_m", units.x0);
  manifest.set("derived.soliton_photon_number", units.photon_number);
  manifest.set("derived.dtau", grid.dtau());
  manifest.set("derived.domega", grid.domega());
  manifest.set("derived.steps", grid.steps());
  manifest.set("derived.window_s", grid.window * units.t0);
  manifest.set("derived.z_end_m", grid.z_end * units.x0);
  manifest.set("derived.raman_fraction", raman_fraction(spec.response));
  manifest.set("derived.loss_alpha", units.loss_alpha);
  manifest.set("derived.gain_alpha", units.gain_alpha);
  save(manifest, dir / "manifest.cfg");

  const Propagator propagator(spec);
  const ComplexArray mean = input_field(config.input, grid);
  EnsembleSettings settings;
  settings.propagation.checkpoints = config.checkpoint_list();
  settings.propagation.overflow_bound = config.overflow_bound;
  settings.propagation.record_diagnostics = config.field_trajectories > 0;
  settings.trajectories = config.trajectories;
  settings.threads = resolve_thread_count(options.threads, config.threads);
  settings.block_size = config.block_size;
  settings.max_divergence_fraction = config.max_divergence_fraction;
  settings.keep_fields = config.field_trajectories;
  for (const auto& lo : config.oscillators)
    settings.oscillators.push_back(make_local_oscillator(lo.to_string(), oscillator_mode(lo, config.input, grid), grid.dtau()));

  log << "run: " << config.trajectories << " trajectories, " << to_string(grid.representation) << ", "
      << grid.steps() << " steps, " << settings.threads << " thread(s)\n";
  const EnsembleRun run = run_ensemble(propagator, mean, settings);
  const auto& result = run.result;
  if (!result.all_finite()) fail(ErrorKind::Overflow, "accumulated moments are not finite");

  write_observables(dir, result);

  KeyValueFile summary;
  summary.set("format", std::string("run-summary"));
  summary.set("representation", std::string(to_string(result.representation)));
  summary.set("raw_ordering", std::string(to_string(result.raw_ordering)));
  summary.set("trajectories", config.trajectories);
  summary.set("included", result.trajectory_count);
  summary.set("diverged", result.diverged_count);
  summary.set("warnings", static_cast<long long>(result.warnings.size()));
  for (std::size_t i = 0; i < result.warnings.size(); ++i)
    summary.set("warning." + std::to_string(i), result.warnings[i]);
  for (std::size_t i = 0; i < result.divergences.size(); ++i)
    summary.set("divergence." + std::to_string(i), result.divergences[i]);
  for (std::size_t i = 0; i < result.oscillators.size(); ++i)
    summary.set("oscillator." + std::to_string(i), result.oscillators[i].name);
  save(summary, dir / "summary.txt");

  if (!run.kept.empty()) {
    CheckpointWriter writer(dir / "fields.bin", dir / "fields_index.tsv", grid,
                            grid.representation == Representation::PositiveP);
    for (const auto& rec : run.kept)
      for (const auto& snapshot : rec.snapshots) writer.write(rec.trajectory, snapshot);
    writer.close();
    TableWriter diag(dir / "diagnostics.tsv", "trajectory\tzeta\tnorm\tmax_amplitude");
    for (const auto& rec : run.kept)
      for (const auto& d : rec.diagnostics)
        diag.row({static_cast<double>(rec.trajectory), d.zeta, d.norm, d.max_amplitude});
  }

  for (const auto& w : result.warnings) log << "warning: " << w << '\n';
  log << "run: " << result.trajectory_count << " included, " << result.diverged_count << " diverged; output in "
      << dir.string() << '\n';
  return 0;
}

int cmd_fit(const CommandOptions& options, std::ostream& log) {
  const RunConfig config = resolve_config(options);
  if (config.fit_input.empty()) fail(ErrorKind::Config, "no gain table: pass --input or set fit.input");
  const fs::path input = options.input ? *options.input : config.resolve(config.fit_input);
  const fs::path dir = output_directory(options, config);
  const double t0 = config.fiber.t0;
  const auto samples = read_gain_table(input, config.fit_unit, t0, config.fit_gain_scale);
  const double scale = frequency_scale(config.fit_unit, t0);

  FitOptions fit;
  fit.max_iterations = config.fit_max_iterations;
  if (config.fit_brillouin_bound) fit.brillouin_center_bound = *config.fit_brillouin_bound * scale;
  log << "fit: " << samples.size() << " samples, " << config.fit_terms << " terms\n";
  FitReport report = fit_lorentzians(samples, config.fit_terms, std::nullopt, fit);
  if (config.fit_raman_fraction) report.model = normalize_total_response(report.model, config.fit_raman_fraction);

  const std::string note = "Lorentzian fit of " + input.filename().string() + ", " +
                           std::to_string(config.fit_terms) + " terms";
  if (config.fit_unit == FrequencyUnit::Dimensionless)
    save(to_key_value(report.model, note), dir / "fitted.model");
  else
    save(to_key_value(report.model, config.fit_unit, t0, note), dir / "fitted.model");
  KeyValueFile rep = to_key_value(report);
  rep.set("input", input.filename().string());
  rep.set("frequency_unit", to_string(config.fit_unit));
  rep.set("t0", t0);
  save(rep, dir / "fit_report.txt");
  write_fitted_curve(dir / "fitted_curve.tsv", samples, report.model, scale);

  const double f = raman_fraction(report.model);
  log << "fit: raman_fraction " << format_double(f) << ", residual_rms " << format_double(report.residual_rms)
      << ", " << report.iterations << " iterations\n";
  if (!report.converged)
    fail(ErrorKind::NoConvergence, "no convergence within " + std::to_string(report.iterations) +
                                       " iterations; partial report in " + dir.string());
  return 0;
}

int cmd_verify(const CommandOptions& options, std::ostream& log) {
  RunConfig config = resolve_config(options);
  const fs::path dir = output_directory(options, config);
  NoiseSpec wigner = config.noise_spec();
  wigner.representation = Representation::Wigner;
  wigner.grid.representation = Representation::Wigner;
  NoiseSpec posp = wigner;
  posp.representation = Representation::PositiveP;
  posp.grid.representation = Representation::PositiveP;
  const NoiseGenerator wigner_gen(wigner);
  const NoiseGenerator posp_gen(posp);

  const double dz = config.resolved_verify_dz();
  KeyValueFile summary;
  summary.set("format", std::string("verify-summary"));
  summary.set("draws", static_cast<long long>(config.verify_draws));
  summary.set("dz", dz);
  summary.set("seed", static_cast<long long>(config.grid.seed));
  summary.set("modes", static_cast<long long>(config.grid.modes));
  summary.set("variance_scale", config.variance_scale);
  bool all = true;
  const NoiseSource sources[] = {NoiseSource::InitialField, NoiseSource::WignerAdditive, NoiseSource::PositivePAdditive,
                                 NoiseSource::WignerRaman, NoiseSource::PositivePRaman};
  for (const NoiseSource source : sources) {
    const bool is_posp = source == NoiseSource::PositivePAdditive || source == NoiseSource::PositivePRaman;
    const auto check =
        verify_noise_correlations(is_posp ? posp_gen : wigner_gen, source, config.verify_draws, dz, config.grid.seed);
    const std::string name(to_string(source));
    double worst = 1.0;
    for (const auto& table : check.moments) {
      write_moment_table(dir / ("verify_" + name + "_" + table.name + ".tsv"), table);
      worst = std::min(worst, table.fraction_within);
      summary.set(name + "." + table.name, table.fraction_within);
    }
    const bool ok = check.passed();
    all = all && ok;
    summary.set(name + ".result", std::string(ok ? "pass" : "fail"));
    char buf[160];
    std::snprintf(buf, sizeof(buf), "verify: %-20s %s (worst moment: %.4f of bins within %g SE)\n", name.c_str(),
                  ok ? "PASS" : "FAIL", worst, check.z_limit);
    log << buf;
  }
  summary.set("result", std::string(all ? "pass" : "fail"));
  save(summary, dir / "verify_summary.txt");
  return all ? 0 : 3;
}

KeyValueFile units_report(const RunConfig& config) {
  const auto u = dimensionless_units(config.fiber);
  const auto& g = config.grid;
  KeyValueFile r;
  r.set("format", std::string("units-report"));
  r.set("t0_s", u.t0);
  r.set("x0_m", u.x0);
  r.set("photon_number", u.photon_number);
  r.set("flux_scale_per_s", u.flux_scale);
  r.set("carrier_angular_frequency_rad_per_s", u.carrier_frequency);
  r.set("loss_db_per_km", config.fiber.loss_db_per_km);
  r.set("loss_amplitude_coefficient_per_m", u.amplitude_attenuation_per_m);
  r.set("loss_intensity_coefficient_per_m", u.intensity_attenuation_per_m);
  r.set("loss_alpha", u.loss_alpha);
  r.set("gain_db_per_km", config.fiber.gain_db_per_km);
  r.set("gain_amplitude_coefficient_per_m", u.amplitude_gain_per_m);
  r.set("gain_intensity_coefficient_per_m", u.intensity_gain_per_m);
  r.set("gain_alpha", u.gain_alpha);
  r.set("grid.dtau", g.dtau());
  r.set("grid.dtau_s", g.dtau() * u.t0);
  r.set("grid.window_s", g.window * u.t0);
  r.set("grid.domega", g.domega());
  r.set("grid.domega_rad_per_s", g.domega() / u.t0);
  r.set("grid.dz_m", g.dz * u.x0);
  r.set("grid.z_end_m", g.z_end * u.x0);
  return r;
}

int cmd_units(const CommandOptions& options, std::ostream& out) {
  const RunConfig config = resolve_config(options);
  const KeyValueFile report = units_report(config);
  out << report.to_string();
  if (options.out || !config.output.empty()) save(report, output_directory(options, config) / "units.txt");
  return 0;
}

}  // namespace fibernoise
