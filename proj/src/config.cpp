#include "fibernoise/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "fibernoise/errors.hpp"
#include "fibernoise/ramanfit.hpp"

namespace fibernoise {

namespace {

// Reads keys from a KeyValueFile and remembers which ones were used, so that misspelled
// keys are reported instead of silently ignored.
class Reader {
 public:
  explicit Reader(const KeyValueFile& file) : file_(file) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return file_.contains(key);
  }
  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    return file_.get_string(key, fallback);
  }
  double real(const std::string& key, double fallback) {
    used_.insert(key);
    return file_.get_double(key, fallback);
  }
  long long integer(const std::string& key, long long fallback) {
    used_.insert(key);
    return file_.get_int(key, fallback);
  }
  bool flag(const std::string& key, bool fallback) {
    used_.insert(key);
    return file_.get_bool(key, fallback);
  }
  std::optional<double> optional_real(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return file_.get_double(key);
  }
  std::vector<double> reals(const std::string& key) {
    used_.insert(key);
    return file_.get_doubles(key);
  }

  void reject_unknown() const {
    for (const auto& key : file_.keys()) {
      if (used_.count(key) || key.rfind("derived.", 0) == 0 || key == "format") continue;
      fail(ErrorKind::Config, file_.origin() + ": unknown key '" + key + "'");
    }
  }

 private:
  const KeyValueFile& file_;
  std::set<std::string> used_;
};

int to_int(long long value, const std::string& key) {
  if (value < INT32_MIN || value > INT32_MAX) fail(ErrorKind::Config, key + " is out of range");
  return static_cast<int>(value);
}

std::vector<std::string> split(const std::string& text, char separator) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, separator)) {
    const auto first = part.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = part.find_last_not_of(" \t");
    parts.push_back(part.substr(first, last - first + 1));
  }
  return parts;
}

OscillatorSpec parse_oscillator(const std::string& text) {
  std::istringstream in(text);
  OscillatorSpec spec;
  in >> spec.shape;
  if (spec.shape == "input") {
    std::string extra;
    if (in >> extra) fail(ErrorKind::Config, "observables.local_oscillators: 'input' takes no parameters");
    return spec;
  }
  if (spec.shape != "sech" && spec.shape != "gaussian")
    fail(ErrorKind::Config, "observables.local_oscillators: unknown shape '" + spec.shape + "'");
  if (!(in >> spec.width >> spec.center))
    fail(ErrorKind::Config, "observables.local_oscillators: '" + text + "' needs a width and a center");
  std::string extra;
  if (in >> extra) fail(ErrorKind::Config, "observables.local_oscillators: trailing text in '" + text + "'");
  return spec;
}

void config_check(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::Config, message);
}

std::string boolean(bool value) { return value ? "true" : "false"; }

ComplexArray pulse_shape(const std::string& shape, double amplitude, double width, double center,
                         double frequency, const SimulationGrid& grid) {
  const RealArray tau = grid.tau();
  const RealArray x = (tau - center) / width;
  RealArray envelope;
  if (shape == "sech")
    envelope = amplitude / x.cosh();
  else if (shape == "gaussian")
    envelope = amplitude * (-0.5 * x.square()).exp();
  else if (shape == "vacuum")
    envelope = RealArray::Zero(grid.modes);
  else
    fail(ErrorKind::Config, "unknown pulse shape '" + shape + "'");
  ComplexArray field(grid.modes);
  for (int n = 0; n < grid.modes; ++n) field[n] = envelope[n] * std::polar(1.0, -frequency * tau[n]);
  return field;
}

}  // namespace

std::string OscillatorSpec::to_string() const {
  if (shape == "input") return shape;
  return shape + " " + format_double(width) + " " + format_double(center);
}

void RunConfig::validate() const {
  try {
    grid.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("grid: ") + e.what());
  }
  try {
    fiber.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("fiber: ") + e.what());
  }
  config_check(trajectories >= 1, "run.trajectories must be at least 1 (got " + std::to_string(trajectories) + ")");
  config_check(threads >= 0, "run.threads must not be negative");
  config_check(block_size >= 1, "run.block_size must be at least 1");
  config_check(overflow_bound > 0.0, "run.overflow_bound must be positive");
  config_check(max_divergence_fraction >= 0.0 && max_divergence_fraction <= 1.0,
               "run.max_divergence_fraction must lie in [0, 1]");
  config_check(field_trajectories >= 0, "run.field_trajectories must not be negative");
  config_check(grid.noise_substeps >= 1, "noise.substeps must be at least 1");
  for (double z : checkpoints)
    config_check(std::isfinite(z) && z >= 0.0 && z <= grid.z_end * (1.0 + 1e-12),
                 "run.checkpoints: " + format_double(z) + " lies outside [0, grid.z_end]");
  config_check(input.shape == "sech" || input.shape == "gaussian" || input.shape == "vacuum",
               "input.shape must be sech, gaussian or vacuum");
  config_check(input.width > 0.0, "input.width must be positive");
  if (photon_number) config_check(*photon_number > 0.0, "noise.photon_number must be positive");
  if (raman_fraction)
    config_check(*raman_fraction >= 0.0 && *raman_fraction < 1.0, "model.raman_fraction must lie in [0, 1)");
  for (const auto& lo : oscillators) {
    if (lo.shape == "input")
      config_check(input.shape != "vacuum", "observables.local_oscillators: 'input' is undefined for a vacuum input");
    else
      config_check(lo.width > 0.0, "observables.local_oscillators: width must be positive");
  }
  config_check(verify_draws >= 100, "verify.draws must be at least 100");
  config_check(resolved_verify_dz() > 0.0, "verify.dz must be positive");
  config_check(variance_scale > 0.0, "verify.variance_scale must be positive");
  config_check(fit_terms >= 1, "fit.terms must be at least 1");
  config_check(fit_max_iterations >= 1, "fit.max_iterations must be at least 1");
  config_check(fit_gain_scale > 0.0, "fit.gain_scale must be positive");
  if (uses_response_file())
    config_check(std::filesystem::exists(resolve(response)), "model.response: no such file '" + response + "'");
  if (uses_profile_file()) {
    config_check(std::filesystem::exists(resolve(profile)), "model.profile: no such file '" + profile + "'");
    config_check(fiber.loss_db_per_km == 0.0 && fiber.gain_db_per_km == 0.0,
                 "fiber.loss_db_per_km and fiber.gain_db_per_km cannot be combined with a profile file");
  }
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<double> RunConfig::checkpoint_list() const {
  if (checkpoints.empty()) return {grid.z_end};
  return checkpoints;
}

double RunConfig::resolved_photon_number() const {
  if (photon_number) return *photon_number;
  return dimensionless_units(fiber).photon_number;
}

ResponseModel RunConfig::load_response() const {
  ResponseModel model = ResponseModel::electronic();
  if (uses_response_file()) model = load_response_model(resolve(response), fiber.t0);
  if (raman_fraction) {
    if (*raman_fraction > 0.0 && !model.has_raman())
      fail(ErrorKind::Config, "model.raman_fraction needs a response model with Lorentzian terms");
    return normalize_total_response(model, raman_fraction);
  }
  if (!model.has_raman()) return model;
  return normalize_total_response(model);
}

GainLossProfile RunConfig::load_profile() const {
  if (uses_profile_file()) return load_gain_loss_profile(resolve(profile), fiber.t0);
  if (fiber.loss_db_per_km == 0.0 && fiber.gain_db_per_km == 0.0) return GainLossProfile::transparent();
  const auto units = dimensionless_units(fiber);
  return GainLossProfile::flat(units.gain_alpha, units.loss_alpha);
}

NoiseSpec RunConfig::noise_spec() const {
  NoiseSpec spec;
  spec.representation = grid.representation;
  spec.grid = grid;
  spec.response = load_response();
  spec.profile = load_profile();
  spec.fiber = fiber;
  spec.photon_number = resolved_photon_number();
  spec.initial = noise_initial;
  spec.additive = noise_additive;
  spec.raman = noise_raman;
  spec.variance_scale = variance_scale;
  return spec;
}

RunConfig run_config_from(const KeyValueFile& file, const std::filesystem::path& base_dir) {
  Reader in(file);
  RunConfig c;
  c.base_dir = base_dir;

  c.response = in.text("model.response", c.response);
  c.raman_fraction = in.optional_real("model.raman_fraction");
  c.profile = in.text("model.profile", c.profile);

  auto& f = c.fiber;
  f.wavelength = in.real("fiber.wavelength", f.wavelength);
  f.group_velocity = in.real("fiber.group_velocity", f.group_velocity);
  f.gvd = in.real("fiber.gvd", f.gvd);
  f.n2 = in.real("fiber.n2", f.n2);
  f.mode_area = in.real("fiber.mode_area", f.mode_area);
  f.t0 = in.real("fiber.t0", f.t0);
  f.temperature = in.real("fiber.temperature", f.temperature);
  f.loss_db_per_km = in.real("fiber.loss_db_per_km", f.loss_db_per_km);
  f.gain_db_per_km = in.real("fiber.gain_db_per_km", f.gain_db_per_km);

  auto& g = c.grid;
  g.modes = to_int(in.integer("grid.modes", g.modes), "grid.modes");
  g.window = in.real("grid.window", g.window);
  g.z_end = in.real("grid.z_end", g.z_end);
  g.dz = in.real("grid.dz", g.dz);
  g.dispersion = parse_dispersion_sign(in.text("grid.dispersion", "anomalous"));

  c.input.shape = in.text("input.shape", c.input.shape);
  c.input.amplitude = in.real("input.amplitude", c.input.amplitude);
  c.input.width = in.real("input.width", c.input.width);
  c.input.center = in.real("input.center", c.input.center);
  c.input.frequency = in.real("input.frequency", c.input.frequency);

  g.representation = parse_representation(in.text("noise.representation", "wigner"));
  c.noise_initial = in.flag("noise.initial", c.noise_initial);
  c.noise_additive = in.flag("noise.additive", c.noise_additive);
  c.noise_raman = in.flag("noise.raman", c.noise_raman);
  c.photon_number = in.optional_real("noise.photon_number");
  g.noise_substeps = to_int(in.integer("noise.substeps", g.noise_substeps), "noise.substeps");

  const long long seed = in.integer("run.seed", 1);
  config_check(seed >= 0, "run.seed must not be negative");
  g.seed = static_cast<std::uint64_t>(seed);
  c.trajectories = in.integer("run.trajectories", c.trajectories);
  c.threads = to_int(in.integer("run.threads", c.threads), "run.threads");
  c.block_size = to_int(in.integer("run.block_size", c.block_size), "run.block_size");
  if (in.has("run.checkpoints")) c.checkpoints = in.reals("run.checkpoints");
  c.overflow_bound = in.real("run.overflow_bound", c.overflow_bound);
  c.max_divergence_fraction = in.real("run.max_divergence_fraction", c.max_divergence_fraction);
  c.field_trajectories = in.integer("run.field_trajectories", c.field_trajectories);
  c.output = in.text("run.output", c.output);

  for (const auto& part : split(in.text("observables.local_oscillators", ""), ';'))
    c.oscillators.push_back(parse_oscillator(part));

  c.verify_draws = to_int(in.integer("verify.draws", c.verify_draws), "verify.draws");
  c.verify_dz = in.optional_real("verify.dz");
  c.variance_scale = in.real("verify.variance_scale", c.variance_scale);

  c.fit_input = in.text("fit.input", c.fit_input);
  c.fit_unit = parse_frequency_unit(in.text("fit.frequency_unit", to_string(c.fit_unit)));
  c.fit_terms = to_int(in.integer("fit.terms", c.fit_terms), "fit.terms");
  c.fit_gain_scale = in.real("fit.gain_scale", c.fit_gain_scale);
  c.fit_brillouin_bound = in.optional_real("fit.brillouin_center_bound");
  c.fit_raman_fraction = in.optional_real("fit.raman_fraction");
  c.fit_max_iterations = to_int(in.integer("fit.max_iterations", c.fit_max_iterations), "fit.max_iterations");

  in.reject_unknown();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto file = KeyValueFile::load(path);
  return run_config_from(file, path.parent_path());
}

KeyValueFile to_key_value(const RunConfig& c) {
  KeyValueFile out;
  out.set("model.response", c.response);
  if (c.raman_fraction) out.set("model.raman_fraction", *c.raman_fraction);
  out.set("model.profile", c.profile);

  const auto& f = c.fiber;
  out.set("fiber.wavelength", f.wavelength);
  out.set("fiber.group_velocity", f.group_velocity);
  out.set("fiber.gvd", f.gvd);
  out.set("fiber.n2", f.n2);
  out.set("fiber.mode_area", f.mode_area);
  out.set("fiber.t0", f.t0);
  out.set("fiber.temperature", f.temperature);
  out.set("fiber.loss_db_per_km", f.loss_db_per_km);
  out.set("fiber.gain_db_per_km", f.gain_db_per_km);

  const auto& g = c.grid;
  out.set("grid.modes", static_cast<long long>(g.modes));
  out.set("grid.window", g.window);
  out.set("grid.z_end", g.z_end);
  out.set("grid.dz", g.dz);
  out.set("grid.dispersion", std::string(to_string(g.dispersion)));

  out.set("input.shape", c.input.shape);
  out.set("input.amplitude", c.input.amplitude);
  out.set("input.width", c.input.width);
  out.set("input.center", c.input.center);
  out.set("input.frequency", c.input.frequency);

  out.set("noise.representation", std::string(to_string(g.representation)));
  out.set("noise.initial", boolean(c.noise_initial));
  out.set("noise.additive", boolean(c.noise_additive));
  out.set("noise.raman", boolean(c.noise_raman));
  if (c.photon_number) out.set("noise.photon_number", *c.photon_number);
  out.set("noise.substeps", static_cast<long long>(g.noise_substeps));

  out.set("run.seed", static_cast<long long>(g.seed));
  out.set("run.trajectories", c.trajectories);
  out.set("run.block_size", static_cast<long long>(c.block_size));
  std::string checkpoints;
  for (double z : c.checkpoint_list()) checkpoints += (checkpoints.empty() ? "" : ", ") + format_double(z);
  out.set("run.checkpoints", checkpoints);
  out.set("run.overflow_bound", c.overflow_bound);
  out.set("run.max_divergence_fraction", c.max_divergence_fraction);
  out.set("run.field_trajectories", c.field_trajectories);

  std::string oscillators;
  for (const auto& lo : c.oscillators) oscillators += (oscillators.empty() ? "" : "; ") + lo.to_string();
  if (!oscillators.empty()) out.set("observables.local_oscillators", oscillators);
  return out;
}

ComplexArray input_field(const InputPulse& pulse, const SimulationGrid& grid) {
  return pulse_shape(pulse.shape, pulse.amplitude, pulse.width, pulse.center, pulse.frequency, grid);
}

ComplexArray oscillator_mode(const OscillatorSpec& spec, const InputPulse& pulse, const SimulationGrid& grid) {
  if (spec.shape == "input") return input_field(pulse, grid);
  return pulse_shape(spec.shape, 1.0, spec.width, spec.center, 0.0, grid);
}

}  // namespace fibernoise
