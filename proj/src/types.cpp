#include "fibernoise/types.hpp"

#include <string>

#include "fibernoise/errors.hpp"

namespace fibernoise {

std::string_view to_string(Representation rep) {
  return rep == Representation::Wigner ? "wigner" : "positive-p";
}

std::string_view to_string(DispersionSign sign) {
  return sign == DispersionSign::Anomalous ? "anomalous" : "normal";
}

std::string_view to_string(Ordering ordering) {
  switch (ordering) {
    case Ordering::Normal: return "normal";
    case Ordering::Symmetric: return "symmetric";
    case Ordering::Antinormal: return "antinormal";
  }
  return "unknown";
}

Representation parse_representation(std::string_view text) {
  if (text == "wigner") return Representation::Wigner;
  if (text == "positive-p" || text == "positivep" || text == "+p") return Representation::PositiveP;
  fail(ErrorKind::Config, "unknown representation '" + std::string(text) + "' (expected wigner or positive-p)");
}

DispersionSign parse_dispersion_sign(std::string_view text) {
  if (text == "anomalous" || text == "+") return DispersionSign::Anomalous;
  if (text == "normal" || text == "-") return DispersionSign::Normal;
  fail(ErrorKind::Config, "unknown dispersion sign '" + std::string(text) + "' (expected anomalous or normal)");
}

Ordering parse_ordering(std::string_view text) {
  if (text == "normal") return Ordering::Normal;
  if (text == "symmetric") return Ordering::Symmetric;
  if (text == "antinormal") return Ordering::Antinormal;
  fail(ErrorKind::Config, "unknown ordering '" + std::string(text) + "'");
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::DegenerateData: return "degenerate-data";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::NonPositiveCovariance: return "non-positive-covariance";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::TooManyDivergences: return "too-many-divergences";
    case ErrorKind::ZeroIntensity: return "zero-intensity";
    case ErrorKind::UnsupportedOrdering: return "unsupported-ordering";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config:
    case ErrorKind::DegenerateData:
      return 2;
    case ErrorKind::Io:
      return 4;
    default:
      return 3;
  }
}

}  // namespace fibernoise
