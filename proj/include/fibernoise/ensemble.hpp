#pragma once

#include <optional>

#include "fibernoise/integrator.hpp"
#include "fibernoise/observables.hpp"

namespace fibernoise {

struct EnsembleSettings {
  PropagationSettings propagation;
  long long trajectories = 1;
  int threads = 1;
  /// Trajectories per work unit. Blocks are accumulated in trajectory order and merged in
  /// block order, so results do not depend on the thread count.
  int block_size = 64;
  double max_divergence_fraction = 0.01;
  std::vector<LocalOscillator> oscillators;
  /// Full checkpoint fields are kept for trajectories with index below this.
  long long keep_fields = 0;
};

struct EnsembleRun {
  EnsembleResult result;
  std::vector<TrajectoryRecord> kept;  ///< trajectories below keep_fields, in index order
};

/// Runs `settings.trajectories` trajectories from `mean_field`. Diverged (overflowing)
/// trajectories are excluded and counted; TooManyDivergences is raised when their fraction
/// exceeds the configured limit.
EnsembleRun run_ensemble(const Propagator& propagator, const ComplexArray& mean_field, const EnsembleSettings& settings);

/// Worker threads: an explicit request (command-line flag) wins outright; otherwise the configured
/// count (hardware concurrency when not positive) capped by the FIBERNOISE_THREADS variable.
int resolve_thread_count(std::optional<int> requested, int configured);

}  // namespace fibernoise
