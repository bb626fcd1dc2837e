#pragma once

// Counter-based seeding. Every (trajectory, step, purpose) triple gets its own
// engine seeded from a hash of the master seed, so draws do not depend on the
// order in which trajectories are executed.

#include <cstdint>
#include <random>
#include <vector>

#include "fibernoise/types.hpp"

namespace fibernoise {

enum class StreamPurpose : std::uint64_t {
  InitialField = 1,
  Additive = 2,
  Raman = 3,
  Verification = 4,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trajectory, std::uint64_t step, StreamPurpose purpose);

/// Unit normal deviates for one (trajectory, step, purpose). With `substeps` = R > 1, each
/// value is the scaled sum of R deviates keyed by the fine-step indices step*R .. step*R+R-1,
/// so a run with step dz and R = 2 sees the same Brownian path as a run with dz/2.
class NormalStream {
 public:
  NormalStream(std::uint64_t master, std::uint64_t trajectory, std::uint64_t step, StreamPurpose purpose,
               int substeps = 1);

  double next();
  /// (x + i y) / sqrt(2): unit mean-square, circularly symmetric.
  Complex next_circular();

 private:
  std::vector<std::mt19937_64> engines_;
  std::vector<std::normal_distribution<double>> normals_;
  double scale_ = 1.0;
};

}  // namespace fibernoise
