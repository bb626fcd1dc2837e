#include "fibernoise/model_io.hpp"

#include <sstream>
#include <vector>

#include "fibernoise/constants.hpp"
#include "fibernoise/errors.hpp"

namespace fibernoise {
namespace {

void expect_format(const KeyValueFile& file, const std::string& format) {
  const auto found = file.get_string("format", format);
  if (found != format)
    fail(ErrorKind::Config, file.origin() + ": expected format '" + format + "', found '" + found + "'");
}

SpectralCurve curve_from(const KeyValueFile& file, const std::string& name, double scale) {
  const bool has_flat = file.contains(name + ".flat");
  const bool has_table = file.contains(name + ".table");
  if (has_flat && has_table)
    fail(ErrorKind::Config, file.origin() + ": curve '" + name + "' has both flat and table values");
  if (has_table) {
    const auto values = file.get_doubles(name + ".table");
    if (values.empty() || values.size() % 2 != 0)
      fail(ErrorKind::Config, file.origin() + ": curve '" + name + "' table needs (frequency, value) pairs");
    std::vector<std::pair<double, double>> samples;
    for (std::size_t k = 0; k < values.size(); k += 2) samples.emplace_back(values[k] * scale, values[k + 1]);
    try {
      return SpectralCurve::table(std::move(samples));
    } catch (const Error& e) {
      fail(ErrorKind::Config, file.origin() + ": curve '" + name + "': " + e.what());
    }
  }
  return SpectralCurve::flat(file.get_double(name + ".flat", 0.0));
}

void curve_to(KeyValueFile& file, const std::string& name, const SpectralCurve& curve) {
  if (curve.is_flat()) {
    file.set(name + ".flat", curve.flat_value());
    return;
  }
  std::string table;
  for (const auto& [w, v] : curve.samples()) {
    if (!table.empty()) table += ", ";
    table += format_double(w) + " " + format_double(v);
  }
  file.set(name + ".table", table);
}

}  // namespace

FrequencyUnit parse_frequency_unit(const std::string& text) {
  if (text == "dimensionless") return FrequencyUnit::Dimensionless;
  if (text == "THz" || text == "thz") return FrequencyUnit::Terahertz;
  if (text == "cm-1" || text == "wavenumber") return FrequencyUnit::Wavenumber;
  fail(ErrorKind::Config, "unknown frequency unit '" + text + "' (expected dimensionless, THz or cm-1)");
}

std::string to_string(FrequencyUnit unit) {
  switch (unit) {
    case FrequencyUnit::Dimensionless: return "dimensionless";
    case FrequencyUnit::Terahertz: return "THz";
    case FrequencyUnit::Wavenumber: return "cm-1";
  }
  return "dimensionless";
}

double frequency_scale(FrequencyUnit unit, std::optional<double> t0) {
  if (unit == FrequencyUnit::Dimensionless) return 1.0;
  if (!t0 || !(*t0 > 0.0))
    fail(ErrorKind::Config, "a positive time scale t0 is needed to convert " + to_string(unit) + " frequencies");
  const double hz = unit == FrequencyUnit::Terahertz ? 1e12 : 100.0 * constants::speed_of_light;
  return 2.0 * constants::pi * hz * *t0;
}

ResponseModel response_model_from(const KeyValueFile& file, std::optional<double> t0) {
  expect_format(file, "response-model");
  const auto unit = parse_frequency_unit(file.get_string("frequency_unit", "dimensionless"));
  const double scale = frequency_scale(unit, t0);
  const long long count = file.get_int("terms", 0);
  if (count < 0) fail(ErrorKind::Config, file.origin() + ": negative term count");
  std::vector<LorentzianTerm> terms;
  for (long long j = 0; j < count; ++j) {
    const std::string key = "term." + std::to_string(j);
    const auto triple = file.get_doubles(key);
    if (triple.size() != 3)
      fail(ErrorKind::Config, file.origin() + ": '" + key + "' needs three numbers: strength center width");
    terms.push_back({triple[0], triple[1] * scale, triple[2] * scale});
  }
  try {
    return ResponseModel(std::move(terms), file.get_double("electronic_fraction"));
  } catch (const Error& e) {
    fail(ErrorKind::Config, file.origin() + ": " + e.what());
  }
}

KeyValueFile to_key_value(const ResponseModel& model, FrequencyUnit unit, double t0, const std::string& note) {
  const double scale = frequency_scale(unit, t0);
  KeyValueFile file;
  file.set("format", std::string("response-model"));
  if (!note.empty()) file.set("note", note);
  file.set("frequency_unit", to_string(unit));
  file.set("electronic_fraction", model.electronic_fraction());
  file.set("terms", static_cast<long long>(model.lorentzians().size()));
  for (std::size_t j = 0; j < model.lorentzians().size(); ++j) {
    const auto& t = model.lorentzians()[j];
    file.set("term." + std::to_string(j),
             format_double(t.strength) + " " + format_double(t.center / scale) + " " + format_double(t.width / scale));
  }
  return file;
}

KeyValueFile to_key_value(const ResponseModel& model, const std::string& note) {
  return to_key_value(model, FrequencyUnit::Dimensionless, 1.0, note);
}

ResponseModel load_response_model(const std::filesystem::path& path, std::optional<double> t0) {
  return response_model_from(KeyValueFile::load(path), t0);
}

void save_response_model(const std::filesystem::path& path, const ResponseModel& model, const std::string& note) {
  to_key_value(model, note).save(path);
}

GainLossProfile gain_loss_profile_from(const KeyValueFile& file, std::optional<double> t0) {
  expect_format(file, "gain-loss-profile");
  const auto unit = parse_frequency_unit(file.get_string("frequency_unit", "dimensionless"));
  const double scale = unit == FrequencyUnit::Dimensionless ? 1.0 : frequency_scale(unit, t0);
  GainLossProfile profile;
  profile.gain = curve_from(file, "gain", scale);
  profile.loss = curve_from(file, "loss", scale);
  profile.dispersive = curve_from(file, "dispersive", scale);
  profile.detuning_offset = file.get_double("detuning_offset", 0.0);
  try {
    profile.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, file.origin() + ": " + e.what());
  }
  return profile;
}

KeyValueFile to_key_value(const GainLossProfile& profile) {
  KeyValueFile file;
  file.set("format", std::string("gain-loss-profile"));
  file.set("frequency_unit", std::string("dimensionless"));
  file.set("detuning_offset", profile.detuning_offset);
  curve_to(file, "gain", profile.gain);
  curve_to(file, "loss", profile.loss);
  curve_to(file, "dispersive", profile.dispersive);
  return file;
}

GainLossProfile load_gain_loss_profile(const std::filesystem::path& path, std::optional<double> t0) {
  return gain_loss_profile_from(KeyValueFile::load(path), t0);
}

void save_gain_loss_profile(const std::filesystem::path& path, const GainLossProfile& profile) {
  to_key_value(profile).save(path);
}

}  // namespace fibernoise
