#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>

namespace fibernoise {

using Complex = std::complex<double>;
using RealArray = Eigen::ArrayXd;
using ComplexArray = Eigen::ArrayXcd;

/// Phase-space representation used for a stochastic run.
enum class Representation { Wigner, PositiveP };

/// Sign in front of the second-derivative term of the propagation equation.
/// Anomalous dispersion (k'' < 0) carries the positive sign.
enum class DispersionSign { Anomalous, Normal };

/// Operator ordering of a reported second moment.
enum class Ordering { Normal, Symmetric, Antinormal };

std::string_view to_string(Representation rep);
std::string_view to_string(DispersionSign sign);
std::string_view to_string(Ordering ordering);

Representation parse_representation(std::string_view text);
DispersionSign parse_dispersion_sign(std::string_view text);
Ordering parse_ordering(std::string_view text);

inline double dispersion_factor(DispersionSign sign) { return sign == DispersionSign::Anomalous ? 1.0 : -1.0; }

}  // namespace fibernoise
