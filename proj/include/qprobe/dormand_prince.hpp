// Adaptive Dormand-Prince 5(4) stepper for linear or nonlinear ODEs whose
// state is any Eigen dense object (real or complex).
#ifndef QPROBE_DORMAND_PRINCE_HPP
#define QPROBE_DORMAND_PRINCE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qprobe {

struct StepControl {
  double rel_tol{1e-10};
  double abs_tol{1e-12};
  double initial_step{1e-3};
  double max_step{0.5};
  long max_steps{10'000'000};
};

struct IntegrationStats {
  long accepted{0};
  long rejected{0};
  long rhs_evaluations{0};
};

/// Integrates y' = f(t, y) from `t0`, reporting the state at each of the
/// (increasing, >= t0) `sample_times` through `observe(t, y)`. Steps are
/// clipped so that every sample time is hit exactly.
///
/// `rhs(t, y, dydt)` must write the derivative into `dydt`.
template <typename State, typename Rhs, typename Observer>
IntegrationStats integrate_dopri5(Rhs&& rhs, double t0, State y, std::span<const double> sample_times,
                                  Observer&& observe, const StepControl& control = {}) {
  // Butcher tableau (Hairer, Norsett & Wanner).
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!(control.rel_tol > 0) || !(control.abs_tol > 0))
    throw std::invalid_argument("integrate_dopri5: tolerances must be positive");

  IntegrationStats stats;
  State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, stage = y, y_new = y;
  double t = t0;
  double h_next = control.initial_step;
  rhs(t, y, k1);
  ++stats.rhs_evaluations;

  for (double target : sample_times) {
    if (target < t) throw std::invalid_argument("integrate_dopri5: sample times must be increasing and >= t0");
    while (t < target) {
      if (stats.accepted + stats.rejected >= control.max_steps)
        throw std::runtime_error("integrate_dopri5: step budget exhausted");
      const double h = std::min({h_next, control.max_step, target - t});
      const bool lands = (h == target - t);

      stage = y + h * a21 * k1;
      rhs(t + c2 * h, stage, k2);
      stage = y + h * (a31 * k1 + a32 * k2);
      rhs(t + c3 * h, stage, k3);
      stage = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * h, stage, k4);
      stage = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * h, stage, k5);
      stage = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + h, stage, k6);
      y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double t_new = lands ? target : t + h;
      rhs(t_new, y_new, k7);
      stats.rhs_evaluations += 6;

      // Error estimate scaled per component.
      stage = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double err = std::sqrt(
          (stage.cwiseAbs().array() /
           (control.abs_tol + control.rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()))
              .square()
              .mean());

      if (err <= 1.0) {
        t = t_new;
        y.swap(y_new);
        k1.swap(k7);
        ++stats.accepted;
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // A step shortened to land on a sample time says little about the next one.
        if (!(lands && h < h_next)) h_next = h * factor;
      } else {
        ++stats.rejected;
        h_next = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
      }
    }
    observe(t, static_cast<const State&>(y));
  }
  return stats;
}

}  // namespace qprobe

#endif  // QPROBE_DORMAND_PRINCE_HPP
