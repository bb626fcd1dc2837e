#pragma once

// Stochastic sources for both phase-space representations.
//
// Stochastic fields use the symmetric convention
//   G(tau) = (2 pi)^(-1/2) integral dW G~(W) exp(-i W tau),
// and the continuum delta functions are discretized as delta(W - W') -> 1/dW,
// delta(tau - tau') -> 1/dtau and delta(z - z') -> 1/dz. A spectral density S(W)
// therefore means <|G~_k|^2> = S(W_k) / (dW dz) for the on-grid amplitudes
// G~_k = dtau / sqrt(2 pi) * sum_n G(tau_n) exp(i W_k tau_n).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fibernoise/grid.hpp"
#include "fibernoise/model.hpp"
#include "fibernoise/rng.hpp"
#include "fibernoise/state.hpp"

namespace fibernoise {

struct NoiseSpec {
  Representation representation = Representation::Wigner;
  SimulationGrid grid;
  ResponseModel response;
  GainLossProfile profile;
  PhysicalFiber fiber;  ///< t0 and temperature set the phonon occupation
  double photon_number = 1.0;

  bool initial = true;
  bool additive = true;
  bool raman = true;
  /// Multiplies every generated variance but not the reported targets. Only for
  /// negative-control checks of the verification machinery; 1 in real runs.
  double variance_scale = 1.0;

  void validate() const;
  bool any_enabled() const { return initial || additive || raman; }
};

struct RamanNoise {
  ComplexArray raman;       ///< real-valued for Wigner runs
  ComplexArray raman_plus;  ///< positive-P only
};

/// Per-mode covariance of one positive-P Raman mode group, in units of 1/n-bar.
/// For a +-W pair the real vector is (Re a_k, Re a_-k, Re b_k, Re b_-k, Im ...);
/// self-paired modes (W = 0 and Nyquist) use (Re a, Re b, Im a, Im b).
struct PairCovariance {
  int mode = 0;
  int mirror = 0;
  Eigen::MatrixXcd moments;    ///< complex symmetric E[z z^T]
  Eigen::MatrixXd covariance;  ///< real covariance of (Re z, Im z)
  Eigen::MatrixXd factor;      ///< covariance = factor * factor^T
};

/// Real covariance of (Re z, Im z) for prescribed E[z z^T] = S, completed with the
/// smallest admissible Hermitian part E[z z^H] = (S S^H)^(1/2).
Eigen::MatrixXd real_covariance_from_moments(const Eigen::MatrixXcd& moments);

/// Factor C = L L^T by eigendecomposition. Eigenvalues below -1e-10 max(1, lambda_max)
/// raise NonPositiveCovariance; smaller negative ones are clipped to zero.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& covariance);

class NoiseGenerator {
 public:
  explicit NoiseGenerator(NoiseSpec spec);

  const NoiseSpec& spec() const { return spec_; }

  /// Spectral densities on the FFT-ordered grid.
  /// Additive: (aG + aA) / 2n (Wigner) or aG / n (positive-P).
  const RealArray& additive_density() const { return additive_density_; }
  /// Wigner Raman: aR(|W|) [n_th + 1/2] / n.
  const RealArray& raman_density() const { return raman_density_; }
  /// Positive-P <G_R(W) G_R(-W)>: {[n_th + 1/2] aR - i h'(W)} / n.
  const ComplexArray& raman_pair_moment() const { return raman_pair_moment_; }
  /// Positive-P <G_R+(W) G_R(W)>: [n_th + Theta(-W)] aR / n; the Nyquist mode takes 1/2 for Theta.
  /// G_R+(W) here is the transform of the conjugate partner, conj-like: with both fields transformed
  /// alike the moment is carried by the amplitude pair (G_R+ at -W, G_R at W).
  const RealArray& raman_cross_moment() const { return raman_cross_moment_; }
  const std::vector<PairCovariance>& pair_covariances() const { return pairs_; }

  /// Positive-P: mean field and its conjugate, no noise. Wigner: adds circular vacuum noise
  /// of variance 1/(2 n dtau) per grid point.
  FieldState sample_initial_field(const ComplexArray& mean_field, NormalStream& rng) const;
  /// Time-domain additive noise G; the positive-P phi+ equation consumes conj(G).
  ComplexArray sample_additive_noise(double dz, NormalStream& rng) const;
  RealArray sample_raman_noise_wigner(double dz, NormalStream& rng) const;
  RamanNoise sample_raman_noise_posp(double dz, NormalStream& rng) const;

  bool additive_active() const { return spec_.additive && !additive_zero_; }
  bool raman_active() const { return spec_.raman && !raman_zero_; }

  /// G(tau_n) from on-grid amplitudes G~_k, and back.
  ComplexArray to_time_domain(const ComplexArray& amplitudes) const;
  ComplexArray to_amplitudes(const ComplexArray& field) const;

 private:
  NoiseSpec spec_;
  RealArray omega_;
  RealArray additive_density_;
  RealArray raman_density_;
  ComplexArray raman_pair_moment_;
  RealArray raman_cross_moment_;
  std::vector<PairCovariance> pairs_;
  bool additive_zero_ = true;
  bool raman_zero_ = true;
};

enum class NoiseSource { InitialField, WignerAdditive, PositivePAdditive, WignerRaman, PositivePRaman };

std::string_view to_string(NoiseSource source);

/// Empirical against target second moments, one row per frequency (or time) bin.
struct MomentTable {
  std::string name;
  RealArray coordinate;  ///< W_k, or tau_n for the initial field
  ComplexArray target;
  ComplexArray empirical;
  RealArray se_real;
  RealArray se_imag;
  RealArray z_score;  ///< |empirical - target| / sqrt(se_re^2 + se_im^2)
  int bins_within = 0;
  double fraction_within = 0.0;
};

struct NoiseVerification {
  NoiseSource source = NoiseSource::WignerAdditive;
  int draws = 0;
  std::vector<MomentTable> moments;
  double pass_fraction = 0.99;
  double z_limit = 3.0;

  bool passed() const;
};

/// Draws `draws` independent samples from one generator and compares every normalized
/// second moment with its target. Zero-mean tables are included.
NoiseVerification verify_noise_correlations(const NoiseGenerator& generator, NoiseSource source, int draws,
                                            double dz, std::uint64_t seed);

/// Columns: coordinate, target_re, target_im, empirical_re, empirical_im, se_re, se_im, z.
void write_moment_table(const std::filesystem::path& path, const MomentTable& table);

}  // namespace fibernoise
