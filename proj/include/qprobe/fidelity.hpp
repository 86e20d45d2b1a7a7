// Fidelity measures between the two conditional oscillator evolutions and the
// purity formulas that connect them to the reduced states.
#ifndef QPROBE_FIDELITY_HPP
#define QPROBE_FIDELITY_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "qprobe/propagator.hpp"

namespace qprobe {

/// Generalized fidelity |Tr rho01(t)|^2 for an arbitrary Gaussian initial
/// state: exp(-eta^T sigma0 eta - gamma_+ delta). Independent of the initial
/// center, which only enters the phase of the coherence.
template <typename Scalar>
Scalar fidelity_generalized(const Scalar& t, const BasicSystemParams<Scalar>& params,
                            const BasicGaussianState<Scalar>& init) {
  detail::require_nonnegative_time(t, "fidelity_generalized");
  using std::exp;
  const PhaseVector<Scalar> eta = chord_shift(t, params);
  return exp(-init.cov.quadratic_form(eta) - params.gamma_plus() * separation_integral(t, params.g, params.kappa));
}

/// Minus the log of the thermal-state generalized fidelity,
/// M d(t)^2 + kappa N delta(t).
template <typename Scalar>
Scalar log_fidelity_exponent(const Scalar& t, const Scalar& g, const Scalar& kappa, const Scalar& M, const Scalar& N) {
  return M * separation_squared(t, g, kappa) + kappa * N * separation_integral(t, g, kappa);
}

/// Generalized fidelity for the thermal initial state sigma0 = M 1 with
/// M = params.M().
template <typename Scalar>
Scalar fidelity_generalized(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  detail::require_nonnegative_time(t, "fidelity_generalized");
  using std::exp;
  return exp(-log_fidelity_exponent(t, params.g, params.kappa, params.M(), params.N()));
}

/// lim_{t->inf} gamma_+ delta(t) / t = 4 g^2 kappa N / (1 + kappa^2).
/// Zero when kappa = 0, where F_gen keeps oscillating instead of decaying.
inline double fidelity_gen_asymptotic_rate(const SystemParams& params) {
  params.validate();
  return 4.0 * params.g * params.g * params.kappa * params.N() / (1.0 + params.kappa * params.kappa);
}

/// Uhlmann-Jozsa fidelity between two Gaussian states (Isar's closed form).
template <typename Scalar>
Scalar fidelity_uj_gaussian(const BasicGaussianState<Scalar>& first, const BasicGaussianState<Scalar>& second) {
  using std::exp;
  using std::max;
  using std::sqrt;
  const Matrix2<Scalar> sum = first.cov.matrix() + second.cov.matrix();
  const Scalar mu = sum.determinant();
  // Pure states can land a hair below 1/4 through rounding.
  const Scalar excess1 = max(first.cov.determinant() - Scalar(0.25), Scalar(0));
  const Scalar excess2 = max(second.cov.determinant() - Scalar(0.25), Scalar(0));
  const Scalar nu = excess1 * excess2;
  const Scalar prefactor = sqrt(mu + Scalar(4) * nu) - sqrt(Scalar(4) * nu);
  const PhaseVector<Scalar> d = second.center - first.center;
  const Scalar exponent = d.dot(sum.inverse() * d);
  return exp(-Scalar(0.5) * exponent) / prefactor;
}

/// Variance of the thermal-initial-state blocks, alpha(t) + M e^{-2 kappa t}
/// = N/2 + (M - N/2) e^{-2 kappa t}.
template <typename Scalar>
Scalar thermal_block_variance(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  using std::exp;
  return diffusion_width(t, params) + params.M() * exp(-Scalar(2) * params.kappa * t);
}

/// Uhlmann-Jozsa fidelity between rho00(t) and rho11(t) for the thermal
/// initial state sigma0 = M 1: exp(-d(t)^2 / (4 sigma(t))).
template <typename Scalar>
Scalar fidelity_uj_blocks(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  detail::require_nonnegative_time(t, "fidelity_uj_blocks");
  using std::exp;
  return exp(-Scalar(0.25) * separation_squared(t, params.g, params.kappa) / thermal_block_variance(t, params));
}

/// Uhlmann-Jozsa fidelity between rho00(t) and rho11(t) for any Gaussian
/// initial state.
template <typename Scalar>
Scalar fidelity_uj_blocks(const Scalar& t, const BasicSystemParams<Scalar>& params,
                          const BasicGaussianState<Scalar>& init) {
  detail::require_nonnegative_time(t, "fidelity_uj_blocks");
  return fidelity_uj_gaussian(diagonal_block_state(t, params, init, Block::rho00),
                              diagonal_block_state(t, params, init, Block::rho11));
}

/// Long-time value of the thermal Uhlmann-Jozsa fidelity (kappa > 0):
/// the separation saturates at 2g/sqrt(1+kappa^2) and the variance at N/2.
inline double fidelity_uj_long_time_limit(const SystemParams& params) {
  params.validate();
  if (!(params.kappa > 0)) throw std::domain_error("fidelity_uj_long_time_limit: requires kappa > 0");
  return std::exp(-2.0 * params.g * params.g / (params.N() * (1.0 + params.kappa * params.kappa)));
}

/// Purity of the reduced qubit state, a00^2 + a11^2 + 2|a01|^2 F_gen(t).
inline double purity_qubit(double t, const SystemParams& params, const QubitInitState& qubit) {
  return qubit.a00 * qubit.a00 + qubit.a11 * qubit.a11 + 2.0 * std::norm(qubit.a01) * fidelity_generalized(t, params);
}

/// Purity of the reduced oscillator state for a thermal initial state,
/// [a00^2 + a11^2 + 2 a00 a11 F_UJ(t)] / (2 sqrt(det sigma(t))).
inline double purity_oscillator(double t, const SystemParams& params, const QubitInitState& qubit) {
  const double variance = thermal_block_variance(t, params);
  const double numerator = qubit.a00 * qubit.a00 + qubit.a11 * qubit.a11 +
                           2.0 * qubit.a00 * qubit.a11 * fidelity_uj_blocks(t, params);
  return numerator / (2.0 * variance);
}

/// Qubit purity for any Gaussian initial oscillator state.
inline double purity_qubit(double t, const SystemParams& params, const GaussianState& init,
                           const QubitInitState& qubit) {
  return qubit.a00 * qubit.a00 + qubit.a11 * qubit.a11 +
         2.0 * std::norm(qubit.a01) * fidelity_generalized(t, params, init);
}

/// Oscillator purity for any Gaussian initial state. Both blocks share the
/// covariance sigma(t), so only the fidelity between them changes.
inline double purity_oscillator(double t, const SystemParams& params, const GaussianState& init,
                                const QubitInitState& qubit) {
  const double det = evolved_covariance(t, params, init.cov).determinant();
  const double numerator = qubit.a00 * qubit.a00 + qubit.a11 * qubit.a11 +
                           2.0 * qubit.a00 * qubit.a11 * fidelity_uj_blocks(t, params, init);
  return numerator / (2.0 * std::sqrt(det));
}

enum class FidelityKind { generalized, uhlmann_jozsa };

/// Thermal-initial-state fidelity sampled on a time grid.
struct FidelityCurve {
  std::vector<double> times;
  std::vector<double> values;
  FidelityKind kind{FidelityKind::generalized};
  SystemParams params;
  double M{0.5};
};

inline FidelityCurve sample_fidelity_curve(FidelityKind kind, const SystemParams& params, std::span<const double> times) {
  params.validate();
  if (!std::is_sorted(times.begin(), times.end()))
    throw std::invalid_argument("sample_fidelity_curve: times must be ordered");
  FidelityCurve curve{{times.begin(), times.end()}, {}, kind, params, params.M()};
  curve.values.reserve(times.size());
  for (double t : times)
    curve.values.push_back(kind == FidelityKind::generalized ? fidelity_generalized(t, params)
                                                             : fidelity_uj_blocks(t, params));
  return curve;
}

}  // namespace qprobe

#endif  // QPROBE_FIDELITY_HPP
