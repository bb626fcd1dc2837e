#pragma once

#include <numbers>

namespace fibernoise::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299792458.0;    // m/s
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double boltzmann = 1.380649e-23;        // J/K

}  // namespace fibernoise::constants
