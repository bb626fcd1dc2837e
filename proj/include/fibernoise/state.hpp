#pragma once

#include "fibernoise/types.hpp"

namespace fibernoise {

/// Field on the time grid. `phi_plus` is empty for Wigner runs and holds the independent
/// conjugate-like field for positive-P runs.
struct FieldState {
  ComplexArray phi;
  ComplexArray phi_plus;
  double zeta = 0.0;

  bool positive_p() const { return phi_plus.size() > 0; }
};

}  // namespace fibernoise
