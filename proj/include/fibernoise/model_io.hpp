#pragma once

// Text serialization of ResponseModel and GainLossProfile.
//
// Response model:
//
//     format = response-model
//     frequency_unit = dimensionless      # or THz, cm-1 (then a time scale t0 is needed to load)
//     electronic_fraction = 0.8
//     terms = 2
//     term.0 = <F> <center> <width>
//     term.1 = <F> <center> <width>
//
// In THz or cm-1 files the center and width are ordinary frequencies; the dimensionless
// values are W = 2 pi nu t0 and D = 2 pi nu_width t0.
//
// Gain/loss profile:
//
//     format = gain-loss-profile
//     frequency_unit = dimensionless
//     detuning_offset = 0
//     [gain]
//     flat = 0.0
//     [loss]
//     table = -40 0.1, 0 0.05, 40 0.1    # (W, value) pairs, linear interpolation
//     [dispersive]
//     flat = 0

#include <filesystem>
#include <optional>
#include <string>

#include "fibernoise/keyvalue.hpp"
#include "fibernoise/model.hpp"

namespace fibernoise {

enum class FrequencyUnit { Dimensionless, Terahertz, Wavenumber };

FrequencyUnit parse_frequency_unit(const std::string& text);
std::string to_string(FrequencyUnit unit);

/// Multiplier taking a frequency in `unit` to dimensionless W; requires t0 unless dimensionless.
double frequency_scale(FrequencyUnit unit, std::optional<double> t0);

ResponseModel response_model_from(const KeyValueFile& file, std::optional<double> t0 = std::nullopt);
KeyValueFile to_key_value(const ResponseModel& model, const std::string& note = {});
/// Writes center and width as ordinary frequencies in `unit` for time scale t0.
KeyValueFile to_key_value(const ResponseModel& model, FrequencyUnit unit, double t0, const std::string& note = {});

ResponseModel load_response_model(const std::filesystem::path& path, std::optional<double> t0 = std::nullopt);
void save_response_model(const std::filesystem::path& path, const ResponseModel& model, const std::string& note = {});

GainLossProfile gain_loss_profile_from(const KeyValueFile& file, std::optional<double> t0 = std::nullopt);
KeyValueFile to_key_value(const GainLossProfile& profile);

GainLossProfile load_gain_loss_profile(const std::filesystem::path& path, std::optional<double> t0 = std::nullopt);
void save_gain_loss_profile(const std::filesystem::path& path, const GainLossProfile& profile);

}  // namespace fibernoise
