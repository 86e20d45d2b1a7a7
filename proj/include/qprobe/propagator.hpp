// Closed-form propagator kernels of the dephasing-coupled damped oscillator
// and the analytic chord functions of the three oscillator blocks
// rho00 (evolving under H+ = H_osc + g x), rho11 (H-) and rho01.
//
// All kernels are templated on the scalar type so they can be evaluated with
// Eigen's AutoDiffScalar for exact Jacobians.
#ifndef QPROBE_PROPAGATOR_HPP
#define QPROBE_PROPAGATOR_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <type_traits>

#include "qprobe/phase_space.hpp"

namespace qprobe {

enum class Block { rho00, rho11, rho01 };

namespace detail {

template <typename Scalar>
void require_nonnegative_time(const Scalar& t, const char* who) {
  if (!(t >= 0)) throw std::domain_error(std::string(who) + ": time must be >= 0");
}

/// 1 - e^{-x}
template <typename Scalar>
Scalar one_minus_exp(const Scalar& x) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return -std::expm1(-x);
  } else {
    using std::abs;
    using std::exp;
    if (abs(x) < 1e-3) return x * (Scalar(1) - x / Scalar(2) * (Scalar(1) - x / Scalar(3) * (Scalar(1) - x / Scalar(4))));
    return Scalar(1) - exp(-x);
  }
}

/// Integral of e^{-rate u} over [0, t]; equals t at rate 0.
template <typename Scalar>
Scalar decay_integral(const Scalar& rate, const Scalar& t) {
  using std::abs;
  const Scalar x = rate * t;
  if (abs(x) < 1e-3) {
    // (1 - e^{-x})/x to O(x^5)
    return t * (Scalar(1) - x / Scalar(2) * (Scalar(1) - x / Scalar(3) * (Scalar(1) - x / Scalar(4) * (Scalar(1) - x / Scalar(5)))));
  }
  return one_minus_exp(x) / rate;
}

/// Integral of e^{-kappa u} sin u over [0, t].
template <typename Scalar>
Scalar damped_sine_integral(const Scalar& t, const Scalar& kappa) {
  using std::cos;
  using std::exp;
  using std::sin;
  return (Scalar(1) - exp(-kappa * t) * (kappa * sin(t) + cos(t))) / (Scalar(1) + kappa * kappa);
}

/// Integral of e^{-kappa u} cos u over [0, t].
template <typename Scalar>
Scalar damped_cosine_integral(const Scalar& t, const Scalar& kappa) {
  using std::cos;
  using std::exp;
  using std::sin;
  return (kappa - exp(-kappa * t) * (kappa * cos(t) - sin(t))) / (Scalar(1) + kappa * kappa);
}

}  // namespace detail

/// e^{kappa t} [[cos t, sin t], [-sin t, cos t]]. Any sign of t.
template <typename Scalar>
Matrix2<Scalar> fundamental_matrix(const Scalar& t, const Scalar& kappa) {
  using std::cos;
  using std::exp;
  using std::sin;
  const Scalar e = exp(kappa * t);
  const Scalar c = cos(t), s = sin(t);
  Matrix2<Scalar> m;
  m << e * c, e * s, -e * s, e * c;
  return m;
}

/// Phase-space separation between the rho00 and rho11 Gaussians,
/// d_j(t) = 2g * integral_0^t R_{2j}(-tau) dtau.
template <typename Scalar>
PhaseVector<Scalar> displacement_vector(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  detail::require_nonnegative_time(t, "displacement_vector");
  const Scalar two_g = Scalar(2) * params.g;
  return {two_g * detail::damped_sine_integral<Scalar>(t, params.kappa),
          two_g * detail::damped_cosine_integral<Scalar>(t, params.kappa)};
}

/// Chord-space shift of the off-diagonal block, eta(t) = -(d2(t), d1(t)).
/// Evaluated from (2g/(1+kappa^2)) (R(-t) - 1) (kappa, 1)^T.
template <typename Scalar>
PhaseVector<Scalar> chord_shift(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  detail::require_nonnegative_time(t, "chord_shift");
  const Scalar& kappa = params.kappa;
  const PhaseVector<Scalar> axis(kappa, Scalar(1));
  const PhaseVector<Scalar> rotated = fundamental_matrix(Scalar(-t), kappa) * axis;
  return Scalar(2) * params.g / (Scalar(1) + kappa * kappa) * (rotated - axis);
}

/// |d(t)|^2 = 4g^2/(1+kappa^2) (e^{-2 kappa t} - 2 e^{-kappa t} cos t + 1).
template <typename Scalar>
Scalar separation_squared(const Scalar& t, const Scalar& g, const Scalar& kappa) {
  using std::cos;
  using std::exp;
  const Scalar e = exp(-kappa * t);
  return Scalar(4) * g * g / (Scalar(1) + kappa * kappa) * (e * e - Scalar(2) * e * cos(t) + Scalar(1));
}

/// Time derivative of separation_squared.
template <typename Scalar>
Scalar separation_squared_rate(const Scalar& t, const Scalar& g, const Scalar& kappa) {
  using std::cos;
  using std::exp;
  using std::sin;
  const Scalar e = exp(-kappa * t);
  return Scalar(4) * g * g / (Scalar(1) + kappa * kappa) *
         (-Scalar(2) * kappa * e * e + Scalar(2) * e * (kappa * cos(t) + sin(t)));
}

/// Accumulated squared separation, integral_0^t |d(t')|^2 dt'.
template <typename Scalar>
Scalar separation_integral(const Scalar& t, const Scalar& g, const Scalar& kappa) {
  const Scalar cosine = detail::damped_cosine_integral<Scalar>(t, kappa);
  const Scalar e2 = detail::decay_integral<Scalar>(Scalar(2) * kappa, t);
  return Scalar(4) * g * g / (Scalar(1) + kappa * kappa) * (t - Scalar(2) * cosine + e2);
}

/// Isotropic diffusion width alpha(t) = (nbar + 1/2)(1 - e^{-2 kappa t}).
template <typename Scalar>
Scalar diffusion_width(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  return (params.nbar + Scalar(0.5)) * detail::one_minus_exp<Scalar>(Scalar(2) * params.kappa * t);
}

/// Linear chord coefficient of the off-diagonal block,
/// Gamma(t) = 2 integral_0^t R^T(-t') eta(t') dt'.
template <typename Scalar>
PhaseVector<Scalar> offdiag_linear_term(const Scalar& t, const BasicSystemParams<Scalar>& params) {
  using std::cos;
  using std::exp;
  using std::sin;
  const Scalar& kappa = params.kappa;
  const Scalar e = exp(-kappa * t);
  const Scalar e2 = detail::decay_integral<Scalar>(Scalar(2) * kappa, t);
  const Scalar pref = Scalar(4) * params.g / (Scalar(1) + kappa * kappa);
  return pref * PhaseVector<Scalar>(kappa * e2 - Scalar(1) + e * cos(t), e2 - e * sin(t));
}

/// Covariance of both diagonal blocks, alpha(t) 1 + R^T(-t) sigma0 R(-t).
template <typename Scalar>
BasicCovariance2<Scalar> evolved_covariance(const Scalar& t, const BasicSystemParams<Scalar>& params,
                                            const BasicCovariance2<Scalar>& sigma0) {
  const Matrix2<Scalar> back = fundamental_matrix(Scalar(-t), params.kappa);
  Matrix2<Scalar> m = back.transpose() * sigma0.matrix() * back;
  const Scalar a = diffusion_width(t, params);
  m(0, 0) += a;
  m(1, 1) += a;
  return BasicCovariance2<Scalar>::from_matrix(m);
}

/// Every time-dependent kernel at one instant.
template <typename Scalar>
struct BasicPropagatorKernel {
  Scalar t;
  Matrix2<Scalar> fundamental;          ///< R(t)
  PhaseVector<Scalar> separation;       ///< d(t)
  Scalar diffusion;                     ///< alpha(t)
  PhaseVector<Scalar> shift;            ///< eta(t)
  Scalar separation_integral;           ///< delta(t)
  PhaseVector<Scalar> linear_term;      ///< Gamma(t)
  BasicCovariance2<Scalar> covariance;  ///< sigma(t) for the given sigma0
};
using PropagatorKernel = BasicPropagatorKernel<double>;

template <typename Scalar>
BasicPropagatorKernel<Scalar> kernel_at(const Scalar& t, const BasicSystemParams<Scalar>& params,
                                        const BasicCovariance2<Scalar>& sigma0) {
  detail::require_nonnegative_time(t, "kernel_at");
  return {t,
          fundamental_matrix(t, params.kappa),
          displacement_vector(t, params),
          diffusion_width(t, params),
          chord_shift(t, params),
          separation_integral(t, params.g, params.kappa),
          offdiag_linear_term(t, params),
          evolved_covariance(t, params, sigma0)};
}

/// Chord function of rho00 (Block::rho00) or rho11 (Block::rho11) at time t.
template <typename Scalar>
std::complex<Scalar> chord_block_diag(const PhaseVector<Scalar>& r, const Scalar& t,
                                      const BasicSystemParams<Scalar>& params,
                                      const BasicGaussianState<Scalar>& init, Block block) {
  if (block == Block::rho01) throw std::invalid_argument("chord_block_diag: expects rho00 or rho11");
  detail::require_nonnegative_time(t, "chord_block_diag");
  using std::cos;
  using std::exp;
  using std::sin;
  const PhaseVector<Scalar> back = fundamental_matrix(Scalar(-t), params.kappa) * r;
  const Scalar sign = block == Block::rho00 ? Scalar(-1) : Scalar(1);
  const Scalar phase = sign * Scalar(0.5) * displacement_vector(t, params).dot(r);
  const Scalar damping = exp(-Scalar(0.5) * diffusion_width(t, params) * r.squaredNorm());
  return chord_eval(init, back) * std::complex<Scalar>(damping * cos(phase), damping * sin(phase));
}

/// Chord function of the off-diagonal block rho01 at time t.
template <typename Scalar>
std::complex<Scalar> chord_block_offdiag(const PhaseVector<Scalar>& r, const Scalar& t,
                                         const BasicSystemParams<Scalar>& params,
                                         const BasicGaussianState<Scalar>& init) {
  detail::require_nonnegative_time(t, "chord_block_offdiag");
  using std::cos;
  using std::exp;
  using std::sin;
  const Scalar gp = params.gamma_plus();
  const PhaseVector<Scalar> arg = fundamental_matrix(Scalar(-t), params.kappa) * r + chord_shift(t, params);
  const Scalar log_modulus = -Scalar(0.5) * diffusion_width(t, params) * r.squaredNorm() -
                             Scalar(0.5) * gp * offdiag_linear_term(t, params).dot(r) -
                             Scalar(0.5) * gp * separation_integral(t, params.g, params.kappa);
  const Scalar modulus = exp(log_modulus);
  const Scalar phase = -params.delta * t;
  return chord_eval(init, arg) * std::complex<Scalar>(modulus * cos(phase), modulus * sin(phase));
}

/// Tr rho01(t): the chord function of the off-diagonal block at the origin.
template <typename Scalar>
std::complex<Scalar> coherence_trace(const Scalar& t, const BasicSystemParams<Scalar>& params,
                                     const BasicGaussianState<Scalar>& init) {
  return chord_block_offdiag(PhaseVector<Scalar>(PhaseVector<Scalar>::Zero()), t, params, init);
}

/// Gaussian state of rho00 or rho11 at time t. The rho00 center sits at
/// R^T(-t) x0 - d(t)/2, the rho11 center at R^T(-t) x0 + d(t)/2.
template <typename Scalar>
BasicGaussianState<Scalar> diagonal_block_state(const Scalar& t, const BasicSystemParams<Scalar>& params,
                                                const BasicGaussianState<Scalar>& init, Block block) {
  if (block == Block::rho01) throw std::invalid_argument("diagonal_block_state: expects rho00 or rho11");
  detail::require_nonnegative_time(t, "diagonal_block_state");
  const Matrix2<Scalar> back = fundamental_matrix(Scalar(-t), params.kappa);
  const PhaseVector<Scalar> half_d = Scalar(0.5) * displacement_vector(t, params);
  const PhaseVector<Scalar> base = back.transpose() * init.center;
  return {block == Block::rho00 ? PhaseVector<Scalar>(base - half_d) : PhaseVector<Scalar>(base + half_d),
          evolved_covariance(t, params, init.cov)};
}

/// Wigner function of the reduced oscillator state a00 W(rho00) + a11 W(rho11).
inline double reduced_wigner(const PhaseVector<double>& x, double t, const SystemParams& params,
                             const GaussianState& init, const QubitInitState& qubit) {
  return qubit.a00 * wigner_eval(diagonal_block_state(t, params, init, Block::rho00), x) +
         qubit.a11 * wigner_eval(diagonal_block_state(t, params, init, Block::rho11), x);
}

}  // namespace qprobe

#endif  // QPROBE_PROPAGATOR_HPP
