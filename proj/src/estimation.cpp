#include "qprobe/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

namespace qprobe {

namespace {

// Up to three shared parameters plus a handful of per-series M values, kept
// on the stack.
using Derivatives = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using Ad = Eigen::AutoDiffScalar<Derivatives>;
constexpr int kMaxParameters = 8;

template <typename Scalar>
Scalar softplus(const Scalar& u) {
  using std::exp;
  using std::log;
  if (u > 20.0) return u + log(Scalar(1) + exp(-u));
  return log(Scalar(1) + exp(u));
}

double softplus_inverse(double x) {
  if (!(x > 0)) throw std::domain_error("softplus_inverse: argument must be positive");
  return x > 20.0 ? x + std::log(-std::expm1(-x)) : std::log(std::expm1(x));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double softplus_slope(double u) { return 1.0 / (1.0 + std::exp(-u)); }

bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(a[i]))) return false;
  return true;
}

void require_pair(const CoherenceSeries& first, const CoherenceSeries& second) {
  first.validate();
  second.validate();
  if (!first.M || !second.M) throw Unidentifiable("two-temperature extraction needs both initial M values");
  if (std::abs(*first.M - *second.M) < 1e-12) throw DegenerateInput("two-temperature extraction needs M1 != M2");
  if (!same_grid(first.times, second.times)) throw GridMismatch("two-temperature extraction needs identical time grids");
}

bool is_flat(const CoherenceSeries& s) {
  return std::all_of(s.fgen.begin(), s.fgen.end(), [](double f) { return std::abs(f - 1.0) <= 1e-12; });
}

using ResidualFn = std::function<void(const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd& jacobian)>;

struct LmResult {
  Eigen::VectorXd u;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double gradient_norm{0};
  int iterations{0};
  bool converged{false};
};

LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd u, const FitOptions& options) {
  LmResult out;
  residuals(u, out.residuals, out.jacobian);
  double cost = out.residuals.squaredNorm();
  double lambda = 1e-3;
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    const Eigen::VectorXd gradient = out.jacobian.transpose() * out.residuals;
    out.gradient_norm = gradient.lpNorm<Eigen::Infinity>();
    if (out.gradient_norm < options.gradient_tol) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd normal = out.jacobian.transpose() * out.jacobian;
    const Eigen::VectorXd scale = normal.diagonal().cwiseMax(1e-12 * std::max(1.0, normal.diagonal().maxCoeff()));
    // Noisy data leave a finite residual, and near the optimum the gradient
    // is limited by rounding in J^T r. Stationary once the Gauss-Newton step
    // cannot lower the cost by more than working precision.
    const double predicted = gradient.dot(normal.completeOrthogonalDecomposition().solve(gradient));
    if (predicted <= 1e-14 * cost) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += lambda * scale;
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      const Eigen::VectorXd trial = u + step;
      Eigen::VectorXd r;
      Eigen::MatrixXd jac;
      residuals(trial, r, jac);
      const double trial_cost = r.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        accepted = true;
        u = trial;
        out.residuals = std::move(r);
        out.jacobian = std::move(jac);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;  // no descent direction left at working precision
  }
  out.u = std::move(u);
  return out;
}

/// Standard errors of the raw parameters from s^2 (J^T J)^{-1}.
Eigen::VectorXd raw_standard_errors(const LmResult& fit) {
  const long n = fit.residuals.size();
  const long p = fit.u.size();
  if (n <= p) return Eigen::VectorXd::Zero(p);
  const double s2 = fit.residuals.squaredNorm() / static_cast<double>(n - p);
  const Eigen::MatrixXd normal = fit.jacobian.transpose() * fit.jacobian;
  const Eigen::MatrixXd cov = s2 * normal.completeOrthogonalDecomposition().pseudoInverse();
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Ad seed(double value, int count, int index) { return Ad(value, count, index); }
Ad constant(double value, int count) { return Ad(value, Derivatives::Zero(count)); }

/// Coarse profile over kappa with (g^2 M, g^2 N) solved linearly; the exponent
/// is linear in both once kappa is fixed.
struct ProfileGuess {
  double kappa;
  double g2M;
  double g2N;
};

ProfileGuess profile_kappa(const CoherenceSeries& s) {
  ProfileGuess best{0.05, 0.0, 0.0};
  double best_cost = std::numeric_limits<double>::infinity();
  const long n = static_cast<long>(s.times.size());
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) y(i) = -std::log(s.fgen[i]);
  for (int k = 0; k <= 80; ++k) {
    const double kappa = 1e-3 * std::pow(2000.0, k / 80.0);
    Eigen::MatrixXd basis(n, 2);
    for (long i = 0; i < n; ++i) {
      basis(i, 0) = separation_squared(s.times[i], 1.0, kappa);
      basis(i, 1) = kappa * separation_integral(s.times[i], 1.0, kappa);
    }
    const Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(y);
    const double cost = (basis * coef - y).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = {kappa, coef(0), coef(1)};
    }
  }
  return best;
}

double model_exponent(double t, double g, double kappa, double M, double N) {
  return log_fidelity_exponent(t, g, kappa, M, N);
}

double log_residual_norm(std::span<const CoherenceSeries> series, double g, double kappa, std::span<const double> Ms,
                         double N) {
  double sum = 0;
  for (std::size_t s = 0; s < series.size(); ++s)
    for (std::size_t i = 0; i < series[s].times.size(); ++i) {
      const double r = std::log(series[s].fgen[i]) + model_exponent(series[s].times[i], g, kappa, Ms[s], N);
      sum += r * r;
    }
  return std::sqrt(sum);
}

EstimateReport fit_direct(std::span<const CoherenceSeries> series, const FitOptions& options) {
  const auto known = std::find_if(series.begin(), series.end(), [](const CoherenceSeries& s) { return s.M.has_value(); });
  if (known == series.end())
    throw Unidentifiable(
        "direct fit needs at least one series with known M: the data only fix g^2 M, g^2 N and kappa");

  std::vector<int> unknown_slot(series.size(), -1);
  int p = 3;
  for (std::size_t s = 0; s < series.size(); ++s)
    if (!series[s].M) unknown_slot[s] = p++;
  if (p > kMaxParameters) throw std::invalid_argument("fit_parameters: too many series with unknown M");

  // Starting point from the kappa profile of the first known-M series.
  const ProfileGuess guess = profile_kappa(*known);
  const double g2 = std::max(guess.g2M / *known->M, 1e-8);
  const double N0 = std::max(guess.g2N / g2, 1.0 + 1e-3);
  Eigen::VectorXd u0(p);
  u0.head<3>() << softplus_inverse(std::sqrt(g2)), softplus_inverse(guess.kappa), softplus_inverse(N0 - 1.0);
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (unknown_slot[s] < 0) continue;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < series[s].times.size(); ++i) {
      const double t = series[s].times[i];
      const double a = separation_squared(t, 1.0, guess.kappa);
      const double rest = -std::log(series[s].fgen[i]) - g2 * N0 * guess.kappa * separation_integral(t, 1.0, guess.kappa);
      num += a * rest;
      den += a * a;
    }
    const double M0 = den > 0 ? num / (g2 * den) : 1.0;
    u0(unknown_slot[s]) = softplus_inverse(std::max(M0 - 0.5, 1e-3));
  }

  std::size_t total = 0;
  for (const auto& s : series) total += s.times.size();

  const ResidualFn residuals = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(static_cast<long>(total));
    jac.resize(static_cast<long>(total), p);
    const Ad g = softplus(seed(u(0), p, 0));
    const Ad kappa = softplus(seed(u(1), p, 1));
    const Ad N = Ad(1.0) + softplus(seed(u(2), p, 2));
    long row = 0;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const Ad M = unknown_slot[s] < 0 ? constant(*series[s].M, p)
                                       : Ad(0.5) + softplus(seed(u(unknown_slot[s]), p, unknown_slot[s]));
      for (std::size_t i = 0; i < series[s].times.size(); ++i, ++row) {
        const Ad e = log_fidelity_exponent(constant(series[s].times[i], p), g, kappa, M, N);
        r(row) = std::log(series[s].fgen[i]) + e.value();
        jac.row(row) = e.derivatives().transpose();
      }
    }
  };
  const LmResult fit = levenberg_marquardt(residuals, u0, options);
  const Eigen::VectorXd raw_err = raw_standard_errors(fit);

  EstimateReport report;
  report.method = FitMode::direct;
  report.g = softplus(fit.u(0));
  report.kappa = softplus(fit.u(1));
  report.N = 1.0 + softplus(fit.u(2));
  report.g_error = softplus_slope(fit.u(0)) * raw_err(0);
  report.kappa_error = softplus_slope(fit.u(1)) * raw_err(1);
  report.N_error = softplus_slope(fit.u(2)) * raw_err(2);
  bool reported_M = false;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int slot = unknown_slot[s];
    const double M = slot < 0 ? *series[s].M : 0.5 + softplus(fit.u(slot));
    report.series_M.push_back(M);
    if (slot >= 0 && !reported_M) {
      report.M = M;
      report.M_error = softplus_slope(fit.u(slot)) * raw_err(slot);
      reported_M = true;
    }
  }
  if (!reported_M) report.M = report.series_M.front();
  report.residual_norm = fit.residuals.norm();
  report.gradient_norm = fit.gradient_norm;
  report.iterations = fit.iterations;
  report.converged = fit.converged;
  if (!fit.converged)
    throw FitNotConverged("fit_parameters: no convergence (gradient norm " + format_double(fit.gradient_norm) + ")",
                          report);
  return report;
}

EstimateReport fit_two_temperature(std::span<const CoherenceSeries> series, const FitOptions& options) {
  if (series.size() != 2) throw std::invalid_argument("two-temperature mode needs exactly two series");
  const CoherenceSeries& first = series[0];
  const CoherenceSeries& second = series[1];
  const std::vector<double> d2 = extract_d2(first, second);
  const std::vector<double> bath = extract_bath_term(first, second);
  const std::vector<double>& times = first.times;
  const long n = static_cast<long>(times.size());

  // (g, kappa) from d^2. For fixed kappa, d^2 is g^2 times a known shape.
  double kappa0 = 0.05, g20 = 0.0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 80; ++k) {
    const double kappa = 1e-3 * std::pow(2000.0, k / 80.0);
    double num = 0, den = 0;
    for (long i = 0; i < n; ++i) {
      const double a = separation_squared(times[i], 1.0, kappa);
      num += a * d2[i];
      den += a * a;
    }
    const double g2 = den > 0 ? num / den : 0.0;
    double cost = 0;
    for (long i = 0; i < n; ++i) {
      const double r = g2 * separation_squared(times[i], 1.0, kappa) - d2[i];
      cost += r * r;
    }
    if (cost < best) {
      best = cost;
      kappa0 = kappa;
      g20 = g2;
    }
  }
  Eigen::VectorXd u0(2);
  u0 << softplus_inverse(std::sqrt(std::max(g20, 1e-8))), softplus_inverse(kappa0);
  const ResidualFn d2_residuals = [&](const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(n);
    jac.resize(n, 2);
    const Ad g = softplus(seed(u(0), 2, 0));
    const Ad kappa = softplus(seed(u(1), 2, 1));
    for (long i = 0; i < n; ++i) {
      const Ad model = separation_squared(constant(times[i], 2), g, kappa);
      r(i) = model.value() - d2[i];
      jac.row(i) = model.derivatives().transpose();
    }
  };
  const LmResult shape = levenberg_marquardt(d2_residuals, u0, options);
  const double g = softplus(shape.u(0));
  const double kappa = softplus(shape.u(1));

  // N from the bath term, linear in N once (g, kappa) are fixed.
  Eigen::VectorXd basis(n);
  for (long i = 0; i < n; ++i) basis(i) = kappa * separation_integral(times[i], g, kappa);
  const double y_dot = basis.dot(Eigen::Map<const Eigen::VectorXd>(bath.data(), n));
  const double N0 = basis.squaredNorm() > 0 ? std::max(y_dot / basis.squaredNorm(), 1.0 + 1e-3) : 1.5;
  Eigen::VectorXd v0(1);
  v0 << softplus_inverse(N0 - 1.0);
  const ResidualFn bath_residuals = [&](const Eigen::VectorXd& v, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double N = 1.0 + softplus(v(0));
    r = N * basis - Eigen::Map<const Eigen::VectorXd>(bath.data(), n);
    jac = softplus_slope(v(0)) * basis;
  };
  const LmResult temperature = levenberg_marquardt(bath_residuals, v0, options);

  const Eigen::VectorXd shape_err = raw_standard_errors(shape);
  const Eigen::VectorXd temperature_err = raw_standard_errors(temperature);
  EstimateReport report;
  report.method = FitMode::two_temperature;
  report.g = g;
  report.kappa = kappa;
  report.N = 1.0 + softplus(temperature.u(0));
  report.M = *first.M;
  report.series_M = {*first.M, *second.M};
  report.g_error = softplus_slope(shape.u(0)) * shape_err(0);
  report.kappa_error = softplus_slope(shape.u(1)) * shape_err(1);
  report.N_error = softplus_slope(temperature.u(0)) * temperature_err(0);
  report.residual_norm = log_residual_norm(series, report.g, report.kappa, report.series_M, report.N);
  report.gradient_norm = std::max(shape.gradient_norm, temperature.gradient_norm);
  report.iterations = shape.iterations + temperature.iterations;
  report.converged = shape.converged && temperature.converged;
  if (!report.converged)
    throw FitNotConverged("fit_parameters: two-temperature fit did not converge (gradient norm " +
                              format_double(report.gradient_norm) + ")",
                          report);
  return report;
}

}  // namespace

void CoherenceSeries::validate() const {
  if (times.size() != fgen.size()) throw std::invalid_argument("CoherenceSeries: times and fgen differ in length");
  if (times.empty()) throw std::invalid_argument("CoherenceSeries: empty series");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0) throw std::invalid_argument("CoherenceSeries: times must be >= 0");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("CoherenceSeries: times must be strictly increasing");
    if (!(fgen[i] > 0) || !std::isfinite(fgen[i]))
      throw std::invalid_argument("CoherenceSeries: samples must be positive and finite");
  }
  if (M && !(*M >= 0.5)) throw std::invalid_argument("CoherenceSeries: M must be >= 1/2");
  if (noise && !(*noise >= 0)) throw std::invalid_argument("CoherenceSeries: noise must be >= 0");
}

const char* to_string(FitMode mode) { return mode == FitMode::direct ? "direct-fit" : "two-temperature"; }

FitMode fit_mode_from_string(const std::string& name) {
  if (name == "direct" || name == "direct-fit") return FitMode::direct;
  if (name == "two-temperature") return FitMode::two_temperature;
  throw std::invalid_argument("unknown fit mode '" + name + "' (expected direct or two-temperature)");
}

std::vector<double> extract_d2(const CoherenceSeries& first, const CoherenceSeries& second) {
  require_pair(first, second);
  const double M1 = *first.M, M2 = *second.M;
  std::vector<double> out(first.times.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (std::log(first.fgen[i]) - std::log(second.fgen[i])) / (M2 - M1);
  return out;
}

std::vector<double> extract_bath_term(const CoherenceSeries& first, const CoherenceSeries& second) {
  require_pair(first, second);
  const double M1 = *first.M, M2 = *second.M;
  std::vector<double> out(first.times.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (M2 * std::log(first.fgen[i]) - M1 * std::log(second.fgen[i])) / (M1 - M2);
  return out;
}

EstimateReport fit_parameters(std::span<const CoherenceSeries> series, FitMode mode, const FitOptions& options) {
  if (series.empty()) throw std::invalid_argument("fit_parameters: no series given");
  std::size_t samples = 0;
  for (const auto& s : series) {
    s.validate();
    samples += s.times.size();
  }
  if (samples < 8) throw std::invalid_argument("fit_parameters: too few samples");
  if (std::all_of(series.begin(), series.end(), is_flat))
    throw Unidentifiable("fit_parameters: F_gen is identically 1, so the coupling is zero and nothing is identifiable");
  return mode == FitMode::direct ? fit_direct(series, options) : fit_two_temperature(series, options);
}

CoherenceSeries synthesize_series(double g, double kappa, double M, double N, std::span<const double> times,
                                  double noise, std::mt19937_64& rng, bool M_known) {
  if (!(noise >= 0)) throw std::invalid_argument("synthesize_series: noise must be >= 0");
  CoherenceSeries out;
  out.times.assign(times.begin(), times.end());
  out.fgen.reserve(times.size());
  if (M_known) out.M = M;
  if (noise > 0) out.noise = noise;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double t : times) {
    double factor = 1.0;
    if (noise > 0) {
      do factor = 1.0 + noise * gauss(rng);
      while (!(factor > 0));
    }
    out.fgen.push_back(std::exp(-log_fidelity_exponent(t, g, kappa, M, N)) * factor);
  }
  return out;
}

std::vector<double> uniform_grid(double t_min, double t_max, double step) {
  if (!(step > 0) || !(t_max >= t_min)) throw std::invalid_argument("uniform_grid: need step > 0 and t_max >= t_min");
  const long count = std::lround(std::floor((t_max - t_min) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (long i = 0; i < count; ++i) out[i] = t_min + static_cast<double>(i) * step;
  return out;
}

}  // namespace qprobe
