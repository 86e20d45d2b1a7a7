#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "qprobe/dormand_prince.hpp"
#include "qprobe/fock_oracle.hpp"
#include "qprobe/propagator.hpp"
#include "test_support.hpp"

using namespace qprobe;
using qprobe::testing::random_gaussian;
using qprobe::testing::random_params;

namespace {

constexpr double kPi = std::numbers::pi;

template <typename F>
double quad(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

// Defining integrals, evaluated by adaptive quadrature.
PhaseVector<double> d_by_quadrature(double t, double g, double kappa) {
  const double s = quad([&](double u) { return std::exp(-kappa * u) * std::sin(u); }, 0.0, t);
  const double c = quad([&](double u) { return std::exp(-kappa * u) * std::cos(u); }, 0.0, t);
  return 2.0 * g * PhaseVector<double>(s, c);
}

double close(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("fundamental_matrix values") {
  CHECK(fundamental_matrix(0.0, 0.3).isIdentity(0.0));
  Matrix2<double> quarter;
  quarter << 0, 1, -1, 0;
  CHECK((fundamental_matrix(kPi / 2, 0.0) - quarter).norm() < 1e-15);

  // R' = (kappa 1 + J) R integrated numerically to t = pi at kappa = 0.1.
  Matrix2<double> gen;
  gen << 0.1, 1.0, -1.0, 0.1;
  Matrix2<double> at_pi;
  const double times[] = {kPi};
  integrate_dopri5([&](double, const Matrix2<double>& y, Matrix2<double>& dy) { dy = gen * y; }, 0.0,
                   Matrix2<double>(Matrix2<double>::Identity()), std::span<const double>(times),
                   [&](double, const Matrix2<double>& y) { at_pi = y; }, StepControl{1e-13, 1e-15});
  CHECK((fundamental_matrix(kPi, 0.1) - at_pi).norm() < 1e-10);
  CHECK(at_pi(0, 0) == doctest::Approx(-1.3691).epsilon(1e-4));
  CHECK(std::abs(at_pi(0, 1)) < 1e-10);
}

TEST_CASE("fundamental_matrix group law and inverse") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0), k(0.0, 0.2);
  for (int i = 0; i < 100; ++i) {
    const double kappa = k(rng), t0 = u(rng), t1 = u(rng), t2 = u(rng);
    const Matrix2<double> lhs = fundamental_matrix(t2 - t0, kappa);
    const Matrix2<double> rhs = fundamental_matrix(t2 - t1, kappa) * fundamental_matrix(t1 - t0, kappa);
    CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    CHECK((fundamental_matrix(-t1, kappa) * fundamental_matrix(t1, kappa)).isIdentity(1e-12));
  }
}

TEST_CASE("displacement_vector values") {
  const SystemParams p{0.1, 0.0, 0.0, 0.0, 0.0};
  CHECK(displacement_vector(0.0, p).isZero(0.0));
  const auto d = displacement_vector(kPi, p);
  CHECK(d(0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(std::abs(d(1)) < 1e-15);
  CHECK(d.squaredNorm() == doctest::Approx(0.16).epsilon(1e-14));

  const SystemParams big{2.5, 0.1, 0.0, 0.0, 0.0};
  const double limit = 2.0 * 2.5 / std::sqrt(1.01);
  CHECK(limit == doctest::Approx(4.9752).epsilon(1e-5));
  CHECK(displacement_vector(200.0, big).norm() == doctest::Approx(limit).epsilon(1e-8));
  CHECK((displacement_vector(200.0, big) - d_by_quadrature(200.0, 2.5, 0.1)).norm() < 1e-9);
}

TEST_CASE("kernels match quadrature of their defining integrals") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    SystemParams p = random_params(rng);
    if (i == 0) p.kappa = 0.0;
    const double t = 20.0 * (1.0 - u(rng));

    const auto d_quad = d_by_quadrature(t, p.g, p.kappa);
    CHECK((displacement_vector(t, p) - d_quad).norm() < 1e-9);

    const double alpha_quad = quad([&](double s) { return p.gamma_plus() * std::exp(-2.0 * p.kappa * s); }, 0.0, t);
    CHECK(std::abs(diffusion_width(t, p) - alpha_quad) < 1e-9);

    const double delta_quad = quad([&](double s) { return displacement_vector(s, p).squaredNorm(); }, 0.0, t);
    CHECK(std::abs(separation_integral(t, p.g, p.kappa) - delta_quad) < 1e-9);

    PhaseVector<double> gamma_quad;
    for (int j = 0; j < 2; ++j)
      gamma_quad(j) = quad(
          [&](double s) {
            const PhaseVector<double> v = fundamental_matrix(-s, p.kappa).transpose() * chord_shift(s, p);
            return 2.0 * v(j);
          },
          0.0, t);
    CHECK((offdiag_linear_term(t, p) - gamma_quad).norm() < 1e-9);
  }
}

TEST_CASE("kernel_at examples") {
  const SystemParams p{0.2, 0.1, 0.3, 1.0, 0.0};
  const auto cov = Covariance2(0.7, 0.1, 0.6);
  const auto k0 = kernel_at(0.0, p, cov);
  CHECK(k0.fundamental.isIdentity(0.0));
  CHECK(k0.separation.isZero(0.0));
  CHECK(k0.diffusion == 0.0);
  CHECK(k0.shift.isZero(0.0));
  CHECK(k0.separation_integral == 0.0);
  CHECK(k0.linear_term.isZero(1e-17));
  CHECK((k0.covariance.matrix() - cov.matrix()).norm() < 1e-16);

  CHECK(diffusion_width(1.0, p) == doctest::Approx(0.27190387).epsilon(1e-8));
  CHECK(separation_integral(2 * kPi, 0.1, 0.0) == doctest::Approx(0.5026548).epsilon(1e-7));
  CHECK_THROWS_AS(kernel_at(-1.0, p, cov), std::domain_error);
}

TEST_CASE("eta identity and separation closed form") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const SystemParams p{0.3 * u(rng), 0.2 * u(rng), 0.0, 0.0, 0.0};
    const double t = 100.0 * u(rng);
    const auto d = displacement_vector(t, p);
    const auto eta = chord_shift(t, p);
    CHECK(std::abs(eta(0) + d(1)) < 1e-12);
    CHECK(std::abs(eta(1) + d(0)) < 1e-12);
    CHECK(close(d.squaredNorm(), separation_squared(t, p.g, p.kappa)) < 1e-12);
  }
}

TEST_CASE("separation derivatives") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CHECK(separation_squared_rate(0.0, 0.2, 0.1) == 0.0);
  for (int i = 0; i < 100; ++i) {
    const double g = 0.3 * u(rng), kappa = 0.2 * u(rng), t = 0.1 + 30.0 * u(rng), h = 1e-5;
    const double fd = (separation_squared(t + h, g, kappa) - separation_squared(t - h, g, kappa)) / (2 * h);
    CHECK(std::abs(separation_squared_rate(t, g, kappa) - fd) < 1e-9);
    CHECK(separation_integral(t + 0.5, g, kappa) >= separation_integral(t, g, kappa));
  }
}

TEST_CASE("evolved covariance respects the uncertainty bound") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const auto p = random_params(rng);
    const auto s = random_gaussian(rng);
    const auto cov = evolved_covariance(50.0 * u(rng), p, s.cov);
    CHECK(cov.determinant() >= 0.25 - 1e-12);
  }
  // Long time: the bath fixes the covariance at (nbar + 1/2) 1.
  const SystemParams p{0.1, 0.1, 0.0, 1.0, 0.0};
  const auto late = evolved_covariance(400.0, p, Covariance2(2.0, 0.5, 1.0));
  CHECK((late.matrix() - 1.5 * Matrix2<double>::Identity()).norm() < 1e-12);
}

TEST_CASE("diagonal chord functions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_params(rng);
    const double t = 10.0 + 5.0 * u(rng);
    const auto init = GaussianState::thermal(p.M());
    const PhaseVector<double> r(u(rng), u(rng));
    CHECK(chord_block_diag(PhaseVector<double>(0, 0), t, p, random_gaussian(rng), Block::rho00) ==
          std::complex<double>(1.0, 0.0));
    const auto w00 = chord_block_diag(r, t, p, init, Block::rho00);
    const auto w00_neg = chord_block_diag(PhaseVector<double>(-r), t, p, init, Block::rho00);
    const auto w11 = chord_block_diag(r, t, p, init, Block::rho11);
    CHECK(std::abs(w00_neg - std::conj(w00)) < 1e-15);
    CHECK(std::abs(w11 - w00_neg) < 1e-15);
  }
  SystemParams free{0.0, 0.1, 0.0, 0.5, 0.0};
  const auto s = GaussianState::coherent(0.5, -0.3);
  const PhaseVector<double> r(0.4, 0.9);
  CHECK(chord_block_diag(r, 2.0, free, s, Block::rho00) == chord_block_diag(r, 2.0, free, s, Block::rho11));
  CHECK_THROWS_AS(chord_block_diag(r, 2.0, free, s, Block::rho01), std::invalid_argument);
}

TEST_CASE("off-diagonal chord function and coherence") {
  const SystemParams p{0.2, 0.1, 0.7, 0.5, 0.3};
  const auto init = GaussianState::thermal(p.M());
  const PhaseVector<double> r(0.3, -0.6);
  CHECK(std::abs(chord_block_offdiag(r, 0.0, p, init) - chord_eval(init, r)) < 1e-16);
  CHECK(chord_block_offdiag(PhaseVector<double>(0, 0), 4.0, p, init) == coherence_trace(4.0, p, init));
  CHECK(coherence_trace(0.0, p, init) == std::complex<double>(1.0, 0.0));

  const SystemParams free{0.0, 0.1, 0.7, 0.5, 0.3};
  CHECK(std::abs(coherence_trace(5.0, free, init) - std::polar(1.0, -0.7 * 5.0)) < 1e-15);

  const SystemParams closed{0.1, 0.0, 0.0, 0.0, 0.0};
  const double f = std::norm(coherence_trace(kPi, closed, GaussianState::vacuum()));
  CHECK(f == doctest::Approx(std::exp(-0.08)).epsilon(1e-14));
  CHECK(f == doctest::Approx(0.9231163).epsilon(1e-7));
}

TEST_CASE("block chord functions match the number-basis integration") {
  const SystemParams p{0.1, 0.05, 0.0, 0.5, 0.0};
  const auto init = GaussianState::vacuum();
  const double times[] = {3.0};
  const auto traj = evolve_all_blocks(init, p, OracleConfig{}, times);
  const auto& snap = traj.snapshots.front();
  const PhaseVector<double> r_diag(0.7, -0.2), r_off(0.3, 0.4);
  CHECK(std::abs(chord_from_matrix(snap.rho00, r_diag) - chord_block_diag(r_diag, 3.0, p, init, Block::rho00)) < 1e-6);
  CHECK(std::abs(chord_from_matrix(snap.rho11, r_diag) - chord_block_diag(r_diag, 3.0, p, init, Block::rho11)) < 1e-6);
  CHECK(std::abs(chord_from_matrix(snap.rho01, r_off) - chord_block_offdiag(r_off, 3.0, p, init)) < 1e-6);
  CHECK(std::abs(snap.rho01.trace() - coherence_trace(3.0, p, init)) < 1e-6);

  // A detuned, displaced start exercises the Delta phase and the center.
  const SystemParams q{0.15, 0.08, 0.6, 0.2, 0.0};
  const auto shifted = GaussianState::coherent(0.4, -0.3);
  const auto traj2 = evolve_all_blocks(shifted, q, OracleConfig{}, times);
  const auto& s2 = traj2.snapshots.front();
  CHECK(std::abs(chord_from_matrix(s2.rho00, r_diag) - chord_block_diag(r_diag, 3.0, q, shifted, Block::rho00)) < 1e-6);
  CHECK(std::abs(chord_from_matrix(s2.rho01, r_off) - chord_block_offdiag(r_off, 3.0, q, shifted)) < 1e-6);
}

TEST_CASE("reduced_wigner") {
  const SystemParams p{0.3, 0.1, 0.0, 0.2, 0.4};
  const auto init = GaussianState::thermal(p.M());
  const QubitInitState q;
  const PhaseVector<double> x(0.3, -0.2);
  CHECK(reduced_wigner(x, 0.0, p, init, q) == doctest::Approx(wigner_eval(init, x)).epsilon(1e-15));

  const auto grid = sample_grid(GridSpec{-7, 7, -7, 7, 0.05},
                                [&](const PhaseVector<double>& y) { return reduced_wigner(y, 6.0, p, init, q); });
  CHECK(std::abs(grid.integral() - 1.0) < 1e-6);

  // Component centers follow the classical trajectories of H+ and H-.
  const SystemParams strong{2.5, 0.1, 0.0, 0.5819767068693265, 0.0};
  const auto start = GaussianState::coherent(1.0, 0.5);
  for (double t : {1.0, 3.0, 7.0}) {
    Eigen::Vector4d classical;
    const double times[] = {t};
    // q' = p - kappa q, p' = -q - kappa p -+ g for the rho00 / rho11 component.
    integrate_dopri5(
        [&](double, const Eigen::Vector4d& y, Eigen::Vector4d& dy) {
          dy << y(1) - 0.1 * y(0), -y(0) - 0.1 * y(1) - 2.5, y(3) - 0.1 * y(2), -y(2) - 0.1 * y(3) + 2.5;
        },
        0.0, Eigen::Vector4d(1.0, 0.5, 1.0, 0.5), std::span<const double>(times),
        [&](double, const Eigen::Vector4d& y) { classical = y; }, StepControl{1e-13, 1e-15});
    CHECK((diagonal_block_state(t, strong, start, Block::rho00).center - classical.head<2>()).norm() < 1e-9);
    CHECK((diagonal_block_state(t, strong, start, Block::rho11).center - classical.tail<2>()).norm() < 1e-9);
  }
}
