#include "qprobe/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qprobe/dormand_prince.hpp"

namespace qprobe {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

/// F(k, n) = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^{(k)}(x) for n + k < dim.
/// These are (up to phase) the number-basis matrix elements of a
/// displacement by |beta|^2 = x, and bounded by 1 in magnitude.
Eigen::MatrixXd normalized_laguerre_table(int dim, double x) {
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const int count = dim - k;
    double f0;
    if (x == 0.0) {
      f0 = k == 0 ? 1.0 : 0.0;
    } else {
      f0 = std::exp(0.5 * k * std::log(x) - 0.5 * x - 0.5 * std::lgamma(k + 1.0));
    }
    table(k, 0) = f0;
    if (count > 1) table(k, 1) = (1.0 + k - x) * f0 / std::sqrt(k + 1.0);
    for (int n = 1; n + 1 < count; ++n) {
      table(k, n + 1) = ((2.0 * n + 1.0 + k - x) * table(k, n) - std::sqrt(double(n) * (n + k)) * table(k, n - 1)) /
                        std::sqrt((n + 1.0) * (n + k + 1.0));
    }
  }
  return table;
}

/// <m|D(beta)|n> with D(beta) = exp(beta a^dag - conj(beta) a).
ComplexMatrix displacement_elements(int dim, std::complex<double> beta) {
  const double x = std::norm(beta);
  const Eigen::MatrixXd table = normalized_laguerre_table(dim, x);
  const std::complex<double> unit = x == 0.0 ? std::complex<double>(1.0) : beta / std::abs(beta);
  const std::complex<double> anti_unit = -std::conj(unit);
  ComplexMatrix d = ComplexMatrix::Zero(dim, dim);
  std::complex<double> phase_lower{1.0}, phase_upper{1.0};
  for (int k = 0; k < dim; ++k) {
    for (int n = 0; n + k < dim; ++n) {
      d(n + k, n) = table(k, n) * phase_lower;
      if (k > 0) d(n, n + k) = table(k, n) * phase_upper;
    }
    phase_lower *= unit;
    phase_upper *= anti_unit;
  }
  return d;
}

double top_level(const ComplexMatrix& rho) { return std::abs(rho(rho.rows() - 1, rho.cols() - 1)); }

struct BlockCouplings {
  double left;   // coupling multiplying x on the left
  double right;  // coupling multiplying x on the right
  double phase;  // scalar frequency (qubit splitting for rho01)
};

BlockCouplings couplings_for(const SystemParams& params, Block block) {
  switch (block) {
    case Block::rho00: return {params.g, params.g, 0.0};
    case Block::rho11: return {-params.g, -params.g, 0.0};
    case Block::rho01: return {params.g, -params.g, params.delta};
  }
  throw std::invalid_argument("unknown block");
}

/// Block equation in the interaction picture of H_osc. The dissipator is
/// phase covariant, so only the coupling term picks up time dependence:
/// x(t) = (a e^{-it} + a^dag e^{it})/sqrt(2).
class InteractionPictureGenerator {
 public:
  InteractionPictureGenerator(int dim, const SystemParams& params, Block block)
      : dim_(dim), couplings_(couplings_for(params, block)), kappa_(params.kappa), nbar_(params.nbar), sqrt_n_(dim + 1) {
    for (int n = 0; n <= dim; ++n) sqrt_n_[n] = std::sqrt(static_cast<double>(n));
  }

  void operator()(double t, const ComplexMatrix& y, ComplexMatrix& dydt) const {
    const int d = dim_;
    const std::complex<double> c = std::polar(1.0 / std::numbers::sqrt2, -t);
    const std::complex<double> cc = std::conj(c);
    const std::complex<double> gl = -kI * couplings_.left;
    const std::complex<double> gr = -kI * couplings_.right;
    const std::complex<double> scalar_phase = -kI * couplings_.phase;
    const double emit = kappa_ * (1.0 + nbar_);
    const double absorb = kappa_ * nbar_;
    dydt.resize(d, d);
    for (int n = 0; n < d; ++n) {
      const double aad_n = n + 1 < d ? n + 1.0 : 0.0;
      for (int m = 0; m < d; ++m) {
        const std::complex<double> v = y(m, n);
        std::complex<double> xl = 0.0, xr = 0.0;
        if (m + 1 < d) xl += c * sqrt_n_[m + 1] * y(m + 1, n);
        if (m > 0) xl += cc * sqrt_n_[m] * y(m - 1, n);
        if (n > 0) xr += c * sqrt_n_[n] * y(m, n - 1);
        if (n + 1 < d) xr += cc * sqrt_n_[n + 1] * y(m, n + 1);
        std::complex<double> acc = gl * xl - gr * xr + scalar_phase * v;

        const double aad_m = m + 1 < d ? m + 1.0 : 0.0;
        std::complex<double> lowered = 0.0, raised = 0.0;
        if (m + 1 < d && n + 1 < d) lowered = sqrt_n_[m + 1] * sqrt_n_[n + 1] * y(m + 1, n + 1);
        if (m > 0 && n > 0) raised = sqrt_n_[m] * sqrt_n_[n] * y(m - 1, n - 1);
        acc -= emit * (double(m + n) * v - 2.0 * lowered);
        acc -= absorb * ((aad_m + aad_n) * v - 2.0 * raised);
        dydt(m, n) = acc;
      }
    }
  }

  /// Schroedinger-picture matrix from the interaction-picture one.
  ComplexMatrix to_schroedinger(const ComplexMatrix& y, double t) const {
    ComplexMatrix out(dim_, dim_);
    for (int n = 0; n < dim_; ++n)
      for (int m = 0; m < dim_; ++m) out(m, n) = std::polar(1.0, -(m - n) * t) * y(m, n);
    return out;
  }

 private:
  int dim_;
  BlockCouplings couplings_;
  double kappa_;
  double nbar_;
  std::vector<double> sqrt_n_;
};

ComplexMatrix hermitian_sqrt(const ComplexMatrix& rho, const char* who) {
  const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm);
  Eigen::VectorXd lambda = solver.eigenvalues();
  if (lambda.minCoeff() < -1e-10)
    throw std::domain_error(std::string(who) + ": matrix is not positive semidefinite (eigenvalue " +
                            std::to_string(lambda.minCoeff()) + ")");
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * lambda.asDiagonal() * solver.eigenvectors().adjoint();
}

}  // namespace

void OracleConfig::validate() const {
  if (dim != 0 && dim < 2) throw std::invalid_argument("OracleConfig: dim must be >= 2 (or 0 for automatic)");
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw std::invalid_argument("OracleConfig: tolerances must be positive");
  if (!(leak_threshold > 0)) throw std::invalid_argument("OracleConfig: leak threshold must be positive");
  if (max_dim < 2) throw std::invalid_argument("OracleConfig: max_dim must be >= 2");
  if (!(auto_top_population > 0)) throw std::invalid_argument("OracleConfig: auto_top_population must be positive");
}

int default_dimension(const SystemParams& params, const GaussianState& init) {
  const double init_occupation = std::max(params.mbar, std::sqrt(init.cov.determinant()) - 0.5);
  const double displacement = 0.5 * init.center.squaredNorm();
  const double estimate =
      8.0 * (params.nbar + init_occupation + 1.0) + 6.0 * (2.0 * params.g) * (2.0 * params.g) + 8.0 * displacement;
  return std::max(30, static_cast<int>(std::ceil(estimate)));
}

FockOperators build_operators(int dim) {
  if (dim < 2) throw std::invalid_argument("build_operators: dim must be >= 2");
  FockOperators ops;
  ops.a = ComplexMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) ops.a(n - 1, n) = std::sqrt(static_cast<double>(n));
  ops.adag = ops.a.adjoint();
  ops.x = (ops.a + ops.adag) / std::numbers::sqrt2;
  ops.p = (ops.a - ops.adag) / (kI * std::numbers::sqrt2);
  return ops;
}

ComplexMatrix conditional_hamiltonian(int dim, const SystemParams& params, int sign) {
  const FockOperators ops = build_operators(dim);
  ComplexMatrix h = ops.adag * ops.a;
  h.diagonal().array() += 0.5;
  return h + static_cast<double>(sign) * params.g * ops.x;
}

ComplexMatrix lindblad_action(const ComplexMatrix& rho, double kappa, double nbar) {
  const FockOperators ops = build_operators(static_cast<int>(rho.rows()));
  const ComplexMatrix n_op = ops.adag * ops.a;
  const ComplexMatrix n_op_plus = ops.a * ops.adag;
  return -kappa * (1.0 + nbar) * (n_op * rho - 2.0 * ops.a * rho * ops.adag + rho * n_op) -
         kappa * nbar * (n_op_plus * rho - 2.0 * ops.adag * rho * ops.a + rho * n_op_plus);
}

ComplexMatrix block_generator_action(const ComplexMatrix& rho, const SystemParams& params, Block block) {
  const int dim = static_cast<int>(rho.rows());
  ComplexMatrix left, right;
  double phase = 0.0;
  switch (block) {
    case Block::rho00:
      left = right = conditional_hamiltonian(dim, params, +1);
      break;
    case Block::rho11:
      left = right = conditional_hamiltonian(dim, params, -1);
      break;
    case Block::rho01:
      // (Delta/2) sigma_z acts as +Delta/2 from the left and -Delta/2 from the right.
      left = conditional_hamiltonian(dim, params, +1);
      right = conditional_hamiltonian(dim, params, -1);
      phase = params.delta;
      break;
  }
  return -kI * (left * rho - rho * right) - kI * phase * rho + lindblad_action(rho, params.kappa, params.nbar);
}

BlockDensityMatrix::BlockDensityMatrix(Block block, ComplexMatrix entries) : block_(block), entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 2)
    throw std::invalid_argument("BlockDensityMatrix: entries must be square with dim >= 2");
}

double BlockDensityMatrix::top_population() const { return top_level(entries_); }

void BlockDensityMatrix::validate() const {
  if (block_ == Block::rho01) return;
  const double asym = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) throw std::domain_error("BlockDensityMatrix: diagonal block is not Hermitian");
  if (std::abs(trace() - 1.0) > 1e-8) throw std::domain_error("BlockDensityMatrix: diagonal block trace is not 1");
  const ComplexMatrix herm = 0.5 * (entries_ + entries_.adjoint());
  const double min_eig = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -1e-10) throw std::domain_error("BlockDensityMatrix: diagonal block is not positive semidefinite");
}

ComplexMatrix thermal_matrix(int dim, double mbar) {
  if (dim < 2) throw std::invalid_argument("thermal_matrix: dim must be >= 2");
  if (!(mbar >= 0)) throw std::invalid_argument("thermal_matrix: mbar must be >= 0");
  Eigen::VectorXd weights(dim);
  const double ratio = mbar / (1.0 + mbar);
  weights(0) = 1.0;
  for (int n = 1; n < dim; ++n) weights(n) = weights(n - 1) * ratio;
  weights /= weights.sum();
  return weights.cast<std::complex<double>>().asDiagonal();
}

ComplexMatrix gaussian_state_matrix(int dim, const GaussianState& state) {
  const Covariance2& cov = state.cov;
  if (std::abs(cov.s12()) > 1e-12 || std::abs(cov.s11() - cov.s22()) > 1e-12)
    throw std::invalid_argument("gaussian_state_matrix: only isotropic covariances are supported");
  const double mbar = std::max(cov.s11() - 0.5, 0.0);
  if (state.center.isZero(0.0)) return thermal_matrix(dim, mbar);
  // Displace in a padded basis so the cropped block keeps exact entries.
  const int padded = dim + 40 + static_cast<int>(std::ceil(2.0 * state.center.squaredNorm()));
  const std::complex<double> beta(state.center(0) / std::numbers::sqrt2, state.center(1) / std::numbers::sqrt2);
  const ComplexMatrix d = displacement_elements(padded, beta);
  const ComplexMatrix full = d * thermal_matrix(padded, mbar) * d.adjoint();
  ComplexMatrix cropped = full.topLeftCorner(dim, dim);
  cropped /= cropped.trace().real();
  return cropped;
}

std::vector<BlockDensityMatrix> evolve_block_series(const BlockDensityMatrix& init, const SystemParams& params,
                                                    const OracleConfig& config, std::span<const double> times) {
  params.validate();
  config.validate();
  const int dim = init.dim();
  const double init_top = init.top_population();
  if (init_top > config.leak_threshold) throw TruncationLeak(dim, init_top, 2 * dim);

  const InteractionPictureGenerator generator(dim, params, init.block());
  std::vector<BlockDensityMatrix> out;
  out.reserve(times.size());
  StepControl control;
  control.rel_tol = config.rel_tol;
  control.abs_tol = config.abs_tol;
  integrate_dopri5<ComplexMatrix>(
      generator, 0.0, init.entries(), times,
      [&](double t, const ComplexMatrix& y) {
        ComplexMatrix rho = generator.to_schroedinger(y, t);
        const double top = top_level(rho);
        if (top > config.leak_threshold) throw TruncationLeak(dim, top, 2 * dim);
        out.emplace_back(init.block(), std::move(rho));
      },
      control);
  return out;
}

BlockDensityMatrix evolve_block(const BlockDensityMatrix& init, const SystemParams& params, const OracleConfig& config,
                                double t) {
  if (!(t >= 0)) throw std::domain_error("evolve_block: time must be >= 0");
  const double times[] = {t};
  return evolve_block_series(init, params, config, times).front();
}

OracleTrajectory evolve_all_blocks(const GaussianState& init, const SystemParams& params, const OracleConfig& config,
                                   std::span<const double> times) {
  config.validate();
  const bool automatic = config.dim == 0;
  int dim = automatic ? std::min(default_dimension(params, init), config.max_dim) : config.dim;
  // Automatic sizing aims well below the leak threshold: a top level holding 1e-9 still moves
  // the fidelities by ~1e-8.
  OracleConfig run = config;
  if (automatic) run.leak_threshold = std::min(config.leak_threshold, config.auto_top_population);
  while (true) {
    try {
      const ComplexMatrix rho0 = gaussian_state_matrix(dim, init);
      auto b00 = evolve_block_series(BlockDensityMatrix(Block::rho00, rho0), params, run, times);
      auto b11 = evolve_block_series(BlockDensityMatrix(Block::rho11, rho0), params, run, times);
      auto b01 = evolve_block_series(BlockDensityMatrix(Block::rho01, rho0), params, run, times);
      OracleTrajectory trajectory{dim, {}};
      trajectory.snapshots.reserve(times.size());
      for (std::size_t i = 0; i < times.size(); ++i)
        trajectory.snapshots.push_back({times[i], std::move(b00[i]), std::move(b11[i]), std::move(b01[i])});
      return trajectory;
    } catch (const TruncationLeak& leak) {
      if (!automatic) throw;
      if (2 * dim <= config.max_dim) {
        dim *= 2;
      } else if (run.leak_threshold < config.leak_threshold) {
        run.leak_threshold = config.leak_threshold;  // largest dim: settle for the hard guard
      } else {
        throw;
      }
    }
  }
}

std::complex<double> chord_from_matrix(const ComplexMatrix& rho, const PhaseVector<double>& r) {
  const std::complex<double> beta(-r(1) / std::numbers::sqrt2, r(0) / std::numbers::sqrt2);
  const ComplexMatrix d = displacement_elements(static_cast<int>(rho.rows()), beta);
  // Tr[rho D] = sum_{m,n} rho_{nm} D_{mn}
  return rho.transpose().cwiseProduct(d).sum();
}

std::complex<double> chord_from_matrix(const BlockDensityMatrix& rho, const PhaseVector<double>& r) {
  return chord_from_matrix(rho.entries(), r);
}

double wigner_from_matrix(const ComplexMatrix& rho, const PhaseVector<double>& x) {
  const int dim = static_cast<int>(rho.rows());
  // alpha = (q + i p)/sqrt(2); W_{|n+k><n|} = (-1)^n/pi F(k, n; 4|alpha|^2) e^{-i k arg(alpha)}
  const double arg = 2.0 * x.squaredNorm();
  const double theta = std::atan2(x(1), x(0));
  const Eigen::MatrixXd table = normalized_laguerre_table(dim, arg);
  std::complex<double> sum = 0.0;
  for (int k = 0; k < dim; ++k) {
    const std::complex<double> phase = std::polar(1.0, -k * theta);
    std::complex<double> lower = 0.0, upper = 0.0;
    for (int n = 0; n + k < dim; ++n) {
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      lower += sign * table(k, n) * rho(n + k, n);
      if (k > 0) upper += sign * table(k, n) * rho(n, n + k);
    }
    sum += phase * lower + std::conj(phase) * upper;
  }
  return sum.real() / std::numbers::pi;
}

double uhlmann_fidelity(const ComplexMatrix& rho1, const ComplexMatrix& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.rows() != rho1.cols() || rho2.rows() != rho2.cols())
    throw std::invalid_argument("uhlmann_fidelity: dimension mismatch");
  // Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)) is the trace norm of sqrt(rho1) sqrt(rho2). Taking singular
  // values directly avoids square roots of rounding-level eigenvalues, which would add ~1e-8 per
  // numerically empty level.
  const ComplexMatrix product = hermitian_sqrt(rho1, "uhlmann_fidelity") * hermitian_sqrt(rho2, "uhlmann_fidelity");
  const double root_trace = Eigen::BDCSVD<ComplexMatrix>(product).singularValues().sum();
  return root_trace * root_trace;
}

double uhlmann_fidelity(const BlockDensityMatrix& rho1, const BlockDensityMatrix& rho2) {
  rho1.validate();
  rho2.validate();
  return uhlmann_fidelity(rho1.entries(), rho2.entries());
}

ReducedQuantities reduced_quantities(const BlockSnapshot& blocks, const QubitInitState& qubit,
                                     const std::optional<GridSpec>& grid) {
  if (blocks.rho00.dim() != blocks.rho11.dim() || blocks.rho00.dim() != blocks.rho01.dim())
    throw std::invalid_argument("reduced_quantities: blocks have different dimensions");
  if (blocks.rho00.block() != Block::rho00 || blocks.rho11.block() != Block::rho11 ||
      blocks.rho01.block() != Block::rho01)
    throw std::invalid_argument("reduced_quantities: blocks are out of order");
  if (grid) grid->validate();

  ReducedQuantities out;
  out.coherence = blocks.rho01.trace();
  const double p0 = qubit.a00 * blocks.rho00.trace().real();
  const double p1 = qubit.a11 * blocks.rho11.trace().real();
  out.purity_qubit = p0 * p0 + p1 * p1 + 2.0 * std::norm(qubit.a01 * out.coherence);

  const ComplexMatrix osc = qubit.a00 * blocks.rho00.entries() + qubit.a11 * blocks.rho11.entries();
  out.purity_oscillator = (osc * osc).trace().real();
  if (grid) out.wigner = sample_grid(*grid, [&](const PhaseVector<double>& x) { return wigner_from_matrix(osc, x); });
  return out;
}

}  // namespace qprobe
