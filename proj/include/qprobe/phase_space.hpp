// Phase-space domain types for a single bosonic mode in dimensionless units
// (hbar = 1, oscillator frequency = 1): system parameters, Gaussian states and
// their chord / Wigner representations.
#ifndef QPROBE_PHASE_SPACE_HPP
#define QPROBE_PHASE_SPACE_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qprobe {

/// Two real components. Used both as Wigner coordinates (q, p) and chord
/// coordinates (k, s).
template <typename Scalar>
using PhaseVector = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

/// Physical constants of the qubit + damped oscillator model.
///
/// `nbar` is the bath occupation, `mbar` the occupation of the initial
/// thermal oscillator state. N = 2 nbar + 1 and M = mbar + 1/2 are the
/// scales that appear in the closed forms.
template <typename Scalar>
struct BasicSystemParams {
  Scalar g{0};      ///< qubit-oscillator coupling
  Scalar kappa{0};  ///< dissipation rate
  Scalar delta{0};  ///< qubit splitting
  Scalar nbar{0};   ///< bath mean occupation
  Scalar mbar{0};   ///< initial-state mean occupation

  Scalar N() const { return Scalar(2) * nbar + Scalar(1); }
  Scalar M() const { return mbar + Scalar(0.5); }
  Scalar gamma_plus() const { return kappa * N(); }

  void validate() const {
    if (!(kappa >= 0)) throw std::invalid_argument("SystemParams: kappa must be >= 0");
    if (!(nbar >= 0)) throw std::invalid_argument("SystemParams: nbar must be >= 0");
    if (!(mbar >= 0)) throw std::invalid_argument("SystemParams: mbar must be >= 0");
  }
};
using SystemParams = BasicSystemParams<double>;

/// Mean thermal occupation 1/(e^{1/D} - 1) for dimensionless temperature D.
inline double occupation_from_temperature(double temperature) {
  if (!(temperature > 0) || !std::isfinite(temperature))
    throw std::domain_error("occupation_from_temperature: temperature must be > 0");
  // 1/expm1 keeps full precision at high temperature and underflows cleanly to 0.
  return 1.0 / std::expm1(1.0 / temperature);
}

/// Symmetric 2x2 covariance matrix, stored as three entries.
///
/// Construction enforces positive definiteness and the uncertainty bound
/// det >= 1/4 (up to `kDetTolerance`, which admits pure states under rounding).
template <typename Scalar>
class BasicCovariance2 {
 public:
  static constexpr double kDetTolerance = 1e-12;

  BasicCovariance2(Scalar s11, Scalar s12, Scalar s22) : s11_(s11), s12_(s12), s22_(s22) {
    if (!(s11_ > 0) || !(s22_ > 0))
      throw std::invalid_argument("Covariance2: diagonal entries must be positive");
    if (!(determinant() >= Scalar(0.25 - kDetTolerance)))
      throw std::invalid_argument("Covariance2: det must be >= 1/4 (uncertainty principle)");
  }

  static BasicCovariance2 isotropic(Scalar variance) { return {variance, Scalar(0), variance}; }

  /// Uses the upper triangle of `m`.
  static BasicCovariance2 from_matrix(const Matrix2<Scalar>& m) { return {m(0, 0), m(0, 1), m(1, 1)}; }

  Scalar s11() const { return s11_; }
  Scalar s12() const { return s12_; }
  Scalar s22() const { return s22_; }

  Matrix2<Scalar> matrix() const {
    Matrix2<Scalar> m;
    m << s11_, s12_, s12_, s22_;
    return m;
  }

  Scalar determinant() const { return s11_ * s22_ - s12_ * s12_; }

  Matrix2<Scalar> inverse() const {
    Matrix2<Scalar> m;
    m << s22_, -s12_, -s12_, s11_;
    return m / determinant();
  }

  Scalar quadratic_form(const PhaseVector<Scalar>& r) const {
    return s11_ * r(0) * r(0) + Scalar(2) * s12_ * r(0) * r(1) + s22_ * r(1) * r(1);
  }

 private:
  Scalar s11_, s12_, s22_;
};
using Covariance2 = BasicCovariance2<double>;

/// Gaussian oscillator state: first moments and covariance.
template <typename Scalar>
struct BasicGaussianState {
  PhaseVector<Scalar> center{PhaseVector<Scalar>::Zero()};
  BasicCovariance2<Scalar> cov{BasicCovariance2<Scalar>::isotropic(Scalar(0.5))};

  /// Centered thermal state with covariance M * 1, M = mbar + 1/2.
  static BasicGaussianState thermal(Scalar M) { return {PhaseVector<Scalar>::Zero(), BasicCovariance2<Scalar>::isotropic(M)}; }
  static BasicGaussianState vacuum() { return thermal(Scalar(0.5)); }
  /// Coherent state centered at (q0, p0).
  static BasicGaussianState coherent(Scalar q0, Scalar p0) {
    return {PhaseVector<Scalar>(q0, p0), BasicCovariance2<Scalar>::isotropic(Scalar(0.5))};
  }
};
using GaussianState = BasicGaussianState<double>;

/// Initial qubit density matrix [[a00, a01], [conj(a01), a11]].
struct QubitInitState {
  double a00{0.5};
  double a11{0.5};
  std::complex<double> a01{0.5, 0.0};

  QubitInitState() = default;
  QubitInitState(double p00, double p11, std::complex<double> coherence) : a00(p00), a11(p11), a01(coherence) {
    if (!(a00 >= 0) || !(a11 >= 0)) throw std::invalid_argument("QubitInitState: populations must be >= 0");
    if (std::abs(a00 + a11 - 1.0) > 1e-12) throw std::invalid_argument("QubitInitState: populations must sum to 1");
    if (std::norm(a01) > a00 * a11 + 1e-12)
      throw std::invalid_argument("QubitInitState: |a01|^2 must not exceed a00*a11");
  }

  /// (|0> + |1>)/sqrt(2): all entries 1/2.
  static QubitInitState symmetric() { return {}; }
};

/// Chord function exp(i x0.r - r^T sigma r / 2) of a Gaussian state.
template <typename Scalar>
std::complex<Scalar> chord_eval(const BasicGaussianState<Scalar>& state, const PhaseVector<Scalar>& r) {
  using std::exp;
  const Scalar phase = state.center.dot(r);
  const Scalar modulus = exp(-Scalar(0.5) * state.cov.quadratic_form(r));
  using std::cos;
  using std::sin;
  return {modulus * cos(phase), modulus * sin(phase)};
}

/// Normalized Wigner density of a Gaussian state.
template <typename Scalar>
Scalar wigner_eval(const BasicGaussianState<Scalar>& state, const PhaseVector<Scalar>& x) {
  using std::exp;
  using std::sqrt;
  const PhaseVector<Scalar> dx = x - state.center;
  const Scalar det = state.cov.determinant();
  const Scalar quad = dx.dot(state.cov.inverse() * dx);
  return exp(-Scalar(0.5) * quad) / (Scalar(2 * std::numbers::pi) * sqrt(det));
}

}  // namespace qprobe

#endif  // QPROBE_PHASE_SPACE_HPP
