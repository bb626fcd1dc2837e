#include "fibernoise/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "fibernoise/errors.hpp"

namespace fibernoise {

int resolve_thread_count(std::optional<int> requested, int configured) {
  if (requested) {
    require(*requested >= 1, "--threads must be >= 1");
    return *requested;
  }
  int threads = configured > 0 ? configured : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("FIBERNOISE_THREADS"); cap && *cap) {
    char* end = nullptr;
    const long value = std::strtol(cap, &end, 10);
    if (*end != '\0' || value < 1) fail(ErrorKind::Config, "FIBERNOISE_THREADS must be a positive integer");
    threads = std::min<long>(threads, value);
  }
  return threads;
}

namespace {

std::optional<std::string> wigner_validity_warning(const ComplexArray& mean, const NoiseSpec& spec) {
  FieldState s;
  s.phi = mean;
  const ComplexArray photons = mode_photon_numbers(s, spec.photon_number, spec.grid);
  const RealArray n = photons.real();
  const double peak = n.maxCoeff();
  if (!(peak > 0.0)) return "truncated Wigner run without a mean field: the vacuum-only ensemble is outside the "
                            "large-photon-number regime";
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index k = 0; k < n.size(); ++k)
    if (n[k] >= 1e-2 * peak) {
      sum += n[k];
      ++count;
    }
  const double per_mode = sum / count;
  if (per_mode < 10.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "truncated Wigner validity: %.3g mean photons per occupied mode (fewer than 10)", per_mode);
    return std::string(buf);
  }
  return std::nullopt;
}

}  // namespace

EnsembleRun run_ensemble(const Propagator& propagator, const ComplexArray& mean_field, const EnsembleSettings& settings) {
  require(settings.trajectories >= 1, "trajectory count must be >= 1");
  require(settings.block_size >= 1, "block size must be >= 1");
  require(settings.threads >= 1, "thread count must be >= 1");
  require(settings.max_divergence_fraction >= 0.0, "divergence limit must be >= 0");
  const auto& spec = propagator.noise().spec();
  require(mean_field.size() == spec.grid.modes, "mean field length must equal the mode count");
  propagator.checkpoint_steps(settings.propagation.checkpoints);

  const bool symmetric = spec.representation == Representation::Wigner && spec.initial;
  const EnsembleResult empty(spec.grid, spec.representation, symmetric ? Ordering::Symmetric : Ordering::Normal,
                             spec.photon_number, settings.oscillators, settings.propagation.checkpoints);

  const long long total = settings.trajectories;
  const long long blocks = (total + settings.block_size - 1) / settings.block_size;
  std::vector<std::optional<EnsembleResult>> pending(static_cast<std::size_t>(blocks));
  std::map<long long, TrajectoryRecord> kept;
  EnsembleResult merged = empty;
  long long next_merge = 0;
  std::atomic<long long> next_block{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex lock;

  auto worker = [&]() {
    while (!abort) {
      const long long b = next_block++;
      if (b >= blocks) return;
      EnsembleResult part = empty;
      std::vector<TrajectoryRecord> keep;
      try {
        const long long first = b * settings.block_size;
        const long long last = std::min(total, first + settings.block_size);
        for (long long t = first; t < last && !abort; ++t) {
          const auto index = static_cast<std::uint64_t>(t);
          try {
            TrajectoryRecord rec = propagator.propagate(propagator.initial_state(mean_field, index), index,
                                                        settings.propagation);
            part.add(rec);
            if (t < settings.keep_fields) keep.push_back(std::move(rec));
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::Overflow) throw;
            ++part.diverged_count;
            part.divergences.emplace_back(e.what());
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> guard(lock);
        if (!error) error = std::current_exception();
        abort = true;
        return;
      }
      std::lock_guard<std::mutex> guard(lock);
      for (auto& r : keep) kept.emplace(static_cast<long long>(r.trajectory), std::move(r));
      pending[static_cast<std::size_t>(b)] = std::move(part);
      while (next_merge < blocks && pending[static_cast<std::size_t>(next_merge)]) {
        merged.merge(*pending[static_cast<std::size_t>(next_merge)]);
        pending[static_cast<std::size_t>(next_merge)].reset();
        ++next_merge;
      }
    }
  };

  const int threads = static_cast<int>(std::min<long long>(settings.threads, blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  EnsembleRun run;
  run.result = std::move(merged);
  auto& result = run.result;
  for (const auto& w : propagator.warnings()) result.add_warning(w);
  if (spec.representation == Representation::Wigner && spec.initial)
    if (auto w = wigner_validity_warning(mean_field, spec)) result.add_warning(*w);
  for (const auto& w : imaginary_part_diagnostics(result)) result.add_warning(w);
  for (auto& [index, rec] : kept) run.kept.push_back(std::move(rec));

  const double fraction = static_cast<double>(result.diverged_count) / static_cast<double>(total);
  if (result.trajectory_count == 0 || fraction > settings.max_divergence_fraction) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%lld of %lld trajectories diverged (%.3g%%, limit %.3g%%)%s%s",
                  result.diverged_count, total, 100.0 * fraction, 100.0 * settings.max_divergence_fraction,
                  result.divergences.empty() ? "" : "; first: ",
                  result.divergences.empty() ? "" : result.divergences.front().c_str());
    fail(ErrorKind::TooManyDivergences, buf);
  }
  if (!result.all_finite()) fail(ErrorKind::Overflow, "ensemble accumulators are not finite");
  return run;
}

}  // namespace fibernoise
