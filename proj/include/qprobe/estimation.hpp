// Parameter recovery from sampled generalized-fidelity (coherence) records.
#ifndef QPROBE_ESTIMATION_HPP
#define QPROBE_ESTIMATION_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprobe/fidelity.hpp"

namespace qprobe {

/// F_gen samples on a strictly increasing time grid. `M` is the initial
/// thermal parameter when known.
struct CoherenceSeries {
  std::vector<double> times;
  std::vector<double> fgen;
  std::optional<double> M;
  std::optional<double> noise;

  /// Throws std::invalid_argument on size mismatch, non-increasing times,
  /// non-positive samples or M < 1/2.
  void validate() const;
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two series with equal M where different ones are required.
class DegenerateInput : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// Series that must share a time grid do not.
class GridMismatch : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// The data cannot determine the parameters (F identically 1, or no series
/// with known M).
class Unidentifiable : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

enum class FitMode { direct, two_temperature };

const char* to_string(FitMode mode);
FitMode fit_mode_from_string(const std::string& name);

struct EstimateReport {
  double g{0}, kappa{0}, M{0}, N{0};
  double g_error{0}, kappa_error{0}, M_error{0}, N_error{0};
  /// M used or estimated for each input series, in input order.
  std::vector<double> series_M;
  /// sqrt of the sum of squared log-space residuals.
  double residual_norm{0};
  double gradient_norm{0};
  int iterations{0};
  bool converged{false};
  FitMode method{FitMode::direct};

  double nbar() const { return 0.5 * (N - 1.0); }
};

/// Carries the best iterate when the optimizer stops without converging.
class FitNotConverged : public EstimationError {
 public:
  FitNotConverged(const std::string& what, EstimateReport best) : EstimationError(what), best_(std::move(best)) {}
  const EstimateReport& best() const { return best_; }

 private:
  EstimateReport best_;
};

/// -d/dt ln F_gen = M (d^2)'(t) + kappa N d^2(t).
template <typename Scalar>
Scalar log_derivative_model(const Scalar& t, const Scalar& g, const Scalar& kappa, const Scalar& M, const Scalar& N) {
  return M * separation_squared_rate(t, g, kappa) + kappa * N * separation_squared(t, g, kappa);
}

/// (ln F1 - ln F2)/(M2 - M1) sample by sample; equals d^2(t) on model data.
std::vector<double> extract_d2(const CoherenceSeries& first, const CoherenceSeries& second);

/// (M2 ln F1 - M1 ln F2)/(M1 - M2) sample by sample; equals kappa N delta(t).
std::vector<double> extract_bath_term(const CoherenceSeries& first, const CoherenceSeries& second);

struct FitOptions {
  int max_iterations{500};
  double gradient_tol{1e-10};
};

/// Damped least squares on log residuals ln F_obs + M d^2 + kappa N delta.
///
/// direct: any number of series sharing (g, kappa, N); at least one must have
/// known M, the others get their own M estimate.
/// two_temperature: exactly two series with known, different M on one grid;
/// (g, kappa) come from the extracted d^2 and N from the bath term.
EstimateReport fit_parameters(std::span<const CoherenceSeries> series, FitMode mode, const FitOptions& options = {});

/// F_gen on `times` for a thermal initial state, with optional multiplicative
/// Gaussian noise F (1 + noise * xi); draws giving a non-positive factor are
/// redrawn.
CoherenceSeries synthesize_series(double g, double kappa, double M, double N, std::span<const double> times,
                                  double noise, std::mt19937_64& rng, bool M_known = true);

/// Evenly spaced grid t_min, t_min + step, ... up to t_max (inclusive within
/// rounding).
std::vector<double> uniform_grid(double t_min, double t_max, double step);

}  // namespace qprobe

#endif  // QPROBE_ESTIMATION_HPP
