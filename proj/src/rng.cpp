#include "fibernoise/rng.hpp"

#include <cmath>
#include <numbers>

#include "fibernoise/errors.hpp"

namespace fibernoise {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trajectory, std::uint64_t step, StreamPurpose purpose) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ trajectory);
  h = splitmix64(h ^ step);
  return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

NormalStream::NormalStream(std::uint64_t master, std::uint64_t trajectory, std::uint64_t step, StreamPurpose purpose,
                           int substeps) {
  require(substeps >= 1, "noise substeps must be >= 1");
  for (int r = 0; r < substeps; ++r) {
    const std::uint64_t fine = step * static_cast<std::uint64_t>(substeps) + static_cast<std::uint64_t>(r);
    engines_.emplace_back(derive_seed(master, trajectory, fine, purpose));
    normals_.emplace_back(0.0, 1.0);
  }
  scale_ = 1.0 / std::sqrt(static_cast<double>(substeps));
}

double NormalStream::next() {
  if (engines_.size() == 1) return normals_[0](engines_[0]);
  double sum = 0.0;
  for (std::size_t r = 0; r < engines_.size(); ++r) sum += normals_[r](engines_[r]);
  return sum * scale_;
}

Complex NormalStream::next_circular() {
  const double x = next();
  const double y = next();
  constexpr double r = 1.0 / std::numbers::sqrt2;
  return {x * r, y * r};
}

}  // namespace fibernoise
