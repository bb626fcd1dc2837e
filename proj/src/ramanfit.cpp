#include "fibernoise/ramanfit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "fibernoise/errors.hpp"

namespace fibernoise {
namespace {

constexpr Complex I{0.0, 1.0};

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Maps the unconstrained parameter vector (F, center parameter, log width) per term
/// to Lorentzian terms and back.
struct Parameterization {
  int n_terms = 0;
  std::optional<double> bound;

  std::vector<LorentzianTerm> terms(const Eigen::VectorXd& p) const {
    std::vector<LorentzianTerm> out(n_terms);
    for (int j = 0; j < n_terms; ++j) {
      out[j].strength = p[3 * j];
      out[j].center = center(p, j);
      out[j].width = std::exp(p[3 * j + 2]);
    }
    return out;
  }

  double center(const Eigen::VectorXd& p, int j) const {
    if (j == 0 && bound) return *bound * logistic(p[1]);
    return p[3 * j + 1];
  }

  /// d center / d parameter
  double center_derivative(const Eigen::VectorXd& p, int j) const {
    if (j == 0 && bound) {
      const double s = logistic(p[1]);
      return *bound * s * (1.0 - s);
    }
    return 1.0;
  }

  Eigen::VectorXd encode(const std::vector<LorentzianTerm>& terms) const {
    Eigen::VectorXd p(3 * n_terms);
    for (int j = 0; j < n_terms; ++j) {
      p[3 * j] = terms[j].strength;
      if (j == 0 && bound) {
        const double r = std::clamp(terms[j].center / *bound, 1e-6, 1.0 - 1e-6);
        p[1] = std::log(r / (1.0 - r));
      } else {
        p[3 * j + 1] = terms[j].center;
      }
      p[3 * j + 2] = std::log(terms[j].width);
    }
    return p;
  }
};

struct Evaluation {
  Eigen::VectorXd residual;  // sqrt(w) (model - measured)
  Eigen::MatrixXd jacobian;
  double objective = 0.0;
};

Evaluation evaluate(const Parameterization& param, const Eigen::VectorXd& p,
                    const std::vector<GainSpectrumSample>& samples, bool with_jacobian) {
  const int n = static_cast<int>(samples.size());
  Evaluation e;
  e.residual.resize(n);
  if (with_jacobian) e.jacobian.setZero(n, p.size());
  for (int i = 0; i < n; ++i) {
    const double w = samples[i].omega;
    Complex h = 0.0;
    for (int j = 0; j < param.n_terms; ++j) {
      const double f = p[3 * j], c = param.center(p, j), d = std::exp(p[3 * j + 2]);
      const Complex up = 1.0 / (d - I * (w + c));
      const Complex down = 1.0 / (d - I * (w - c));
      h += f * d / (2.0 * I) * (up - down);
    }
    const double sign = h.imag() < 0.0 ? -1.0 : 1.0;
    const double sw = std::sqrt(samples[i].weight);
    e.residual[i] = sw * (2.0 * std::abs(h.imag()) - samples[i].gain);
    if (!with_jacobian) continue;
    for (int j = 0; j < param.n_terms; ++j) {
      const double f = p[3 * j], c = param.center(p, j), d = std::exp(p[3 * j + 2]);
      const Complex up = 1.0 / (d - I * (w + c));
      const Complex down = 1.0 / (d - I * (w - c));
      const Complex d_strength = d / (2.0 * I) * (up - down);
      const Complex d_center = f * d / 2.0 * (up * up + down * down);
      const Complex d_width = f / (2.0 * I) * ((up - d * up * up) - (down - d * down * down));
      const double scale = 2.0 * sign * sw;
      e.jacobian(i, 3 * j) = scale * d_strength.imag();
      e.jacobian(i, 3 * j + 1) = scale * d_center.imag() * param.center_derivative(p, j);
      e.jacobian(i, 3 * j + 2) = scale * d_width.imag() * d;
    }
  }
  e.objective = e.residual.squaredNorm();
  return e;
}

void check_samples(const std::vector<GainSpectrumSample>& samples) {
  for (const auto& s : samples) {
    require(std::isfinite(s.omega) && s.omega >= 0.0, "gain samples need finite frequencies >= 0");
    require(std::isfinite(s.gain) && s.gain >= 0.0, "gain samples need finite non-negative gains");
    require(s.weight > 0.0, "gain sample weights must be positive");
  }
}

}  // namespace

namespace {

std::vector<double> moving_average(const std::vector<GainSpectrumSample>& s, std::size_t half) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(s.size() - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += s[j].gain;
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Distance from sample `c` to where |y| first drops below half of |y[c]|; the nearer side wins.
double half_width(const std::vector<GainSpectrumSample>& s, const std::vector<double>& y, std::size_t c) {
  const double half = 0.5 * std::abs(y[c]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = c; i-- > 0;)
    if (std::abs(y[i]) < half) {
      best = s[c].omega - s[i].omega;
      break;
    }
  for (std::size_t i = c + 1; i < s.size(); ++i)
    if (std::abs(y[i]) < half) {
      best = std::min(best, s[i].omega - s[c].omega);
      break;
    }
  return best;
}

}  // namespace

ResponseModel initial_lorentzian_guess(std::vector<GainSpectrumSample> samples, int n_terms,
                                       std::optional<double> brillouin_center_bound) {
  require(n_terms >= 1, "need at least one Lorentzian term");
  require(samples.size() >= 2, "need at least two samples");
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.omega < b.omega; });
  const auto n = samples.size();
  // Light smoothing keeps measurement noise from producing spurious maxima.
  const std::vector<double> smooth = moving_average(samples, n / 200);
  double peak = 0.0;
  for (double v : smooth) peak = std::max(peak, v);

  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1]) maxima.push_back(i);
  std::stable_sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return smooth[a] > smooth[b]; });

  std::vector<std::size_t> chosen;
  for (auto i : maxima) {
    if (chosen.size() == static_cast<std::size_t>(n_terms)) break;
    const double reach = half_width(samples, smooth, i);
    bool separate = true;
    for (auto c : chosen)
      if (std::abs(samples[c].omega - samples[i].omega) < reach) separate = false;
    if (separate) chosen.push_back(i);
  }
  std::vector<double> centers;
  for (auto i : chosen) centers.push_back(samples[i].omega);
  std::sort(centers.begin(), centers.end());

  // Remaining centers bisect the widest gaps of the band that carries signal.
  const double low = samples.front().omega;
  double high = samples.back().omega;
  if (peak > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      if (smooth[i] > 1e-3 * peak) high = samples[i].omega;
  if (high <= low) high = samples.back().omega;
  while (static_cast<int>(centers.size()) < n_terms) {
    std::vector<double> points{low};
    points.insert(points.end(), centers.begin(), centers.end());
    points.push_back(high);
    std::size_t widest = 0;
    for (std::size_t k = 1; k + 1 < points.size(); ++k)
      if (points[k + 1] - points[k] > points[widest + 1] - points[widest]) widest = k;
    centers.push_back(0.5 * (points[widest] + points[widest + 1]));
    std::sort(centers.begin(), centers.end());
  }

  if (brillouin_center_bound && centers.front() >= *brillouin_center_bound)
    centers.front() = 0.5 * *brillouin_center_bound;

  auto nearest = [&](double w) {
    auto it = std::lower_bound(samples.begin(), samples.end(), w,
                               [](const auto& s, double x) { return s.omega < x; });
    if (it == samples.end()) return n - 1;
    const auto i = static_cast<std::size_t>(it - samples.begin());
    if (i > 0 && w - samples[i - 1].omega < samples[i].omega - w) return i - 1;
    return i;
  };

  const double span = std::max(high - low, 1e-12);
  std::vector<LorentzianTerm> terms;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    double spacing = span;
    if (j > 0) spacing = std::min(spacing, centers[j] - centers[j - 1]);
    if (j + 1 < centers.size()) spacing = std::min(spacing, centers[j + 1] - centers[j]);
    const std::size_t at = nearest(centers[j]);
    // Half the spacing to the neighbouring centers, narrowed to the measured half width.
    double width = 0.5 * spacing;
    if (smooth[at] > 0.0) width = std::min(width, half_width(samples, smooth, at));
    width = std::max(width, 1e-6 * span);
    // alpha_R ~ F at the center of a narrow term
    terms.push_back({smooth[at], centers[j], width});
  }
  return ResponseModel(std::move(terms), 1.0);
}

namespace {

struct LmResult {
  Eigen::VectorXd p;
  Evaluation eval;
  int iterations = 0;
  bool converged = false;
};

LmResult levenberg_marquardt(const Parameterization& param, Eigen::VectorXd p,
                             const std::vector<GainSpectrumSample>& samples, int max_iterations, double tolerance,
                             double log_width_min, double log_width_max, std::vector<double>* history) {
  LmResult r;
  r.eval = evaluate(param, p, samples, true);
  double lambda = 1e-3;
  bool converged = r.eval.objective == 0.0;
  int iteration = 0;
  auto admissible = [&](const Eigen::VectorXd& q) {
    if (!q.allFinite()) return false;
    for (int j = 0; j < param.n_terms; ++j)
      if (q[3 * j + 2] < log_width_min || q[3 * j + 2] > log_width_max) return false;
    return true;
  };
  while (!converged && iteration < max_iterations) {
    ++iteration;
    const Eigen::MatrixXd jtj = r.eval.jacobian.transpose() * r.eval.jacobian;
    const Eigen::VectorXd gradient = r.eval.jacobian.transpose() * r.eval.residual;
    if (gradient.lpNorm<Eigen::Infinity>() <= 1e-300) {
      converged = true;
      break;
    }
    const double diag_floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      Eigen::MatrixXd damped = jtj;
      for (int k = 0; k < damped.rows(); ++k) damped(k, k) += lambda * std::max(jtj(k, k), diag_floor);
      const Eigen::VectorXd trial = p + damped.ldlt().solve(-gradient);
      if (!admissible(trial)) {
        lambda *= 4.0;
        continue;
      }
      const Evaluation next = evaluate(param, trial, samples, false);
      if (std::isfinite(next.objective) && next.objective < r.eval.objective) {
        const double improvement = (r.eval.objective - next.objective) / std::max(r.eval.objective, 1e-300);
        p = trial;
        r.eval = evaluate(param, p, samples, true);
        if (history) history->push_back(r.eval.objective);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (improvement < tolerance || r.eval.objective == 0.0) converged = true;
      } else {
        lambda *= 4.0;
      }
    }
    // No downhill step at any damping: a local minimum to working precision.
    if (!accepted) converged = true;
  }
  r.p = std::move(p);
  r.iterations = iteration;
  r.converged = converged;
  return r;
}

}  // namespace

FitReport fit_lorentzians(std::vector<GainSpectrumSample> samples, int n_terms,
                          const std::optional<ResponseModel>& initial_guess, const FitOptions& options) {
  require(n_terms >= 1, "need at least one Lorentzian term");
  check_samples(samples);
  if (samples.size() < 3 * static_cast<std::size_t>(n_terms))
    fail(ErrorKind::InvalidArgument, "need at least " + std::to_string(3 * n_terms) + " samples for " +
                                         std::to_string(n_terms) + " Lorentzian terms");
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.omega < b.omega; });
  if (samples.front().omega == samples.back().omega)
    fail(ErrorKind::DegenerateData, "all gain samples are at the same frequency");
  if (options.brillouin_center_bound) require(*options.brillouin_center_bound > 0.0, "Brillouin bound must be > 0");

  const ResponseModel start = initial_guess ? *initial_guess
                                            : initial_lorentzian_guess(samples, n_terms, options.brillouin_center_bound);
  require(static_cast<int>(start.lorentzians().size()) == n_terms, "initial guess has the wrong number of terms");

  const double span = samples.back().omega - samples.front().omega;
  double min_spacing = span;
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].omega > samples[i - 1].omega) min_spacing = std::min(min_spacing, samples[i].omega - samples[i - 1].omega);
  const double log_width_min = std::log(1e-3 * min_spacing);
  const double log_width_max = std::log(1e3 * std::max(span, samples.back().omega));

  Parameterization param{n_terms, options.brillouin_center_bound};
  Eigen::VectorXd p0 = param.encode(start.lorentzians());
  for (int j = 0; j < n_terms; ++j) p0[3 * j + 2] = std::clamp(p0[3 * j + 2], log_width_min, log_width_max);

  FitReport report;
  report.objective_history.push_back(evaluate(param, p0, samples, false).objective);
  LmResult best = levenberg_marquardt(param, p0, samples, options.max_iterations, options.relative_tolerance,
                                      log_width_min, log_width_max, &report.objective_history);
  int iterations = best.iterations;

  // Staged start: add one term at a time at the largest misfit, refitting after each
  // addition. Kept only if it beats the fit from the local-maxima start.
  if (options.staged_start && best.eval.objective > 0.0) {
    std::vector<LorentzianTerm> staged;
    if (options.brillouin_center_bound) staged.push_back(start.lorentzians().front());
    LmResult stage;
    bool have_stage = false;
    while (static_cast<int>(staged.size()) < n_terms) {
      const ResponseModel current(staged, 0.0);
      std::vector<double> misfit(samples.size());
      std::size_t worst = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        misfit[i] = samples[i].gain - raman_gain(current, samples[i].omega);
        if (samples[i].omega > 0.0 && std::abs(misfit[i]) > std::abs(misfit[worst])) worst = i;
      }
      double width = half_width(samples, misfit, worst);
      if (!std::isfinite(width)) width = 0.5 * span;
      width = std::clamp(width, std::exp(log_width_min), std::exp(log_width_max));
      staged.push_back({misfit[worst], std::max(samples[worst].omega, min_spacing), width});
      if (options.brillouin_center_bound)
        std::sort(staged.begin() + 1, staged.end(), [](const auto& x, const auto& y) { return x.center < y.center; });
      Parameterization partial{static_cast<int>(staged.size()), options.brillouin_center_bound};
      stage = levenberg_marquardt(partial, partial.encode(staged), samples, options.max_iterations,
                                  options.relative_tolerance, log_width_min, log_width_max, nullptr);
      iterations += stage.iterations;
      staged = partial.terms(stage.p);
      have_stage = true;
    }
    if (have_stage && stage.converged && stage.eval.objective < best.eval.objective) {
      best = std::move(stage);
      report.objective_history.push_back(best.eval.objective);
    }
  }

  const Eigen::VectorXd& p = best.p;
  const Evaluation& current = best.eval;
  auto terms = param.terms(p);
  for (auto& t : terms) {
    if (t.center < 0.0) {  // sin(-W tau) = -sin(W tau)
      t.center = -t.center;
      t.strength = -t.strength;
    }
  }
  ResponseModel fitted(terms, 1.0);
  report.model = ResponseModel(terms, 1.0 - raman_fraction(fitted));
  report.iterations = iterations;
  report.converged = best.converged;

  double weight_sum = 0.0;
  for (const auto& s : samples) weight_sum += s.weight;
  report.residual_rms = std::sqrt(current.objective / weight_sum);

  const int dof = std::max<int>(1, static_cast<int>(samples.size()) - static_cast<int>(p.size()));
  const double s2 = current.objective / dof;
  const Eigen::MatrixXd jtj = current.jacobian.transpose() * current.jacobian;
  const Eigen::MatrixXd cov = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
  for (int j = 0; j < n_terms; ++j) {
    TermDiagnostics d;
    d.strength_sigma = std::sqrt(std::max(0.0, cov(3 * j, 3 * j)));
    d.center_sigma = std::sqrt(std::max(0.0, cov(3 * j + 1, 3 * j + 1))) * std::abs(param.center_derivative(p, j));
    d.width_sigma = std::sqrt(std::max(0.0, cov(3 * j + 2, 3 * j + 2))) * terms[j].width;
    report.terms.push_back(d);
  }
  return report;
}

ResponseModel normalize_total_response(const ResponseModel& model, std::optional<double> f_target) {
  const double f = raman_fraction(model);
  if (f_target) {
    require(*f_target >= 0.0 && *f_target <= 1.0, "target Raman fraction must lie in [0, 1]");
    if (*f_target == 0.0) return ResponseModel::electronic();
    require(f != 0.0, "cannot rescale a model with zero Raman fraction to a non-zero target");
    auto terms = model.lorentzians();
    const double scale = *f_target / f;
    for (auto& t : terms) t.strength *= scale;
    return ResponseModel(std::move(terms), 1.0 - *f_target);
  }
  if (f >= 1.0)
    fail(ErrorKind::InvalidArgument, "Raman fraction >= 1 leaves no electronic headroom; supply a target fraction");
  const double total = model.electronic_fraction() + f;
  require(total > 0.0, "total response h~(0) must be positive to normalize");
  if (std::abs(total - 1.0) <= 1e-15) return model;
  auto terms = model.lorentzians();
  for (auto& t : terms) t.strength /= total;
  return ResponseModel(std::move(terms), model.electronic_fraction() / total);
}

std::vector<GainSpectrumSample> read_gain_table(const std::filesystem::path& path, FrequencyUnit unit,
                                                std::optional<double> t0, double gain_scale) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  const double scale = frequency_scale(unit, t0);
  std::vector<GainSpectrumSample> samples;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',' || c == '\t') c = ' ';
    std::istringstream fields(line);
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        fail(ErrorKind::Config, path.string() + ":" + std::to_string(line_number) + ": not a number: '" + token + "'");
      }
    }
    if (values.empty()) continue;
    if (values.size() < 2 || values.size() > 3)
      fail(ErrorKind::Config, path.string() + ":" + std::to_string(line_number) + ": expected 2 or 3 columns");
    GainSpectrumSample s{values[0] * scale, values[1] * gain_scale, values.size() == 3 ? values[2] : 1.0};
    if (!(s.omega >= 0.0) || !(s.gain >= 0.0) || !(s.weight > 0.0))
      fail(ErrorKind::Config, path.string() + ":" + std::to_string(line_number) +
                                  ": frequency and gain must be >= 0 and weight > 0");
    samples.push_back(s);
  }
  if (samples.empty()) fail(ErrorKind::DegenerateData, path.string() + ": no data rows");
  return samples;
}

KeyValueFile to_key_value(const FitReport& report) {
  KeyValueFile file;
  file.set("format", std::string("fit-report"));
  file.set("converged", std::string(report.converged ? "true" : "false"));
  file.set("iterations", static_cast<long long>(report.iterations));
  file.set("residual_rms", report.residual_rms);
  file.set("raman_fraction", raman_fraction(report.model));
  file.set("electronic_fraction", report.model.electronic_fraction());
  file.set("terms", static_cast<long long>(report.model.lorentzians().size()));
  for (std::size_t j = 0; j < report.model.lorentzians().size(); ++j) {
    const auto& t = report.model.lorentzians()[j];
    const auto& d = report.terms[j];
    file.set("term." + std::to_string(j), format_double(t.strength) + " " + format_double(t.center) + " " +
                                              format_double(t.width));
    file.set("sigma." + std::to_string(j), format_double(d.strength_sigma) + " " + format_double(d.center_sigma) +
                                               " " + format_double(d.width_sigma));
  }
  return file;
}

void write_fitted_curve(const std::filesystem::path& path, const std::vector<GainSpectrumSample>& samples,
                        const ResponseModel& model, double frequency_divisor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << "frequency\tmeasured\tfitted\n";
  char line[128];
  for (const auto& s : samples) {
    std::snprintf(line, sizeof(line), "%.10g\t%.10g\t%.10g\n", s.omega / frequency_divisor, s.gain,
                  raman_gain(model, s.omega));
    out << line;
  }
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace fibernoise
