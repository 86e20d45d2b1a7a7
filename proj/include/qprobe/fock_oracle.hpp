// Brute-force reference engine: integrates the block master equations in a
// truncated number basis and evaluates traces, purities, chord and Wigner
// functions and the Uhlmann fidelity directly from the matrices.
//
// Independent of the closed forms in propagator.hpp / fidelity.hpp; the test
// suite uses it to validate them.
#ifndef QPROBE_FOCK_ORACLE_HPP
#define QPROBE_FOCK_ORACLE_HPP

#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qprobe/phase_space.hpp"
#include "qprobe/propagator.hpp"
#include "qprobe/wigner_grid.hpp"

namespace qprobe {

using ComplexMatrix = Eigen::MatrixXcd;

/// Raised when the top number state carries more than the configured
/// population, i.e. the truncation is too small for the dynamics.
class TruncationLeak : public std::runtime_error {
 public:
  TruncationLeak(int dim, double population, int suggested_dim)
      : std::runtime_error("truncation leak: top-level population " + std::to_string(population) + " at dim " +
                           std::to_string(dim) + "; try dim >= " + std::to_string(suggested_dim)),
        dim_(dim),
        population_(population),
        suggested_dim_(suggested_dim) {}

  int dim() const { return dim_; }
  double population() const { return population_; }
  int suggested_dim() const { return suggested_dim_; }

 private:
  int dim_;
  double population_;
  int suggested_dim_;
};

struct OracleConfig {
  /// Truncation. 0 selects default_dimension() with automatic doubling until
  /// the leak guard passes; a positive value is used as is.
  int dim{0};
  double rel_tol{1e-10};
  double abs_tol{1e-12};
  double leak_threshold{1e-8};
  /// Automatic sizing keeps doubling until the top level holds at most this.
  double auto_top_population{1e-10};
  int max_dim{400};

  void validate() const;
};

/// max(30, ceil(8 (nbar + mbar + 1) + 6 (2g)^2)), plus room for a displaced
/// initial center.
int default_dimension(const SystemParams& params, const GaussianState& init = GaussianState::vacuum());

/// Dense ladder and quadrature operators in the number basis.
struct FockOperators {
  ComplexMatrix a;
  ComplexMatrix adag;
  ComplexMatrix x;  ///< (a + a^dag)/sqrt(2)
  ComplexMatrix p;  ///< (a - a^dag)/(i sqrt(2))
};
FockOperators build_operators(int dim);

/// H_osc + sign * g x, with sign = +1 for rho00 and -1 for rho11.
ComplexMatrix conditional_hamiltonian(int dim, const SystemParams& params, int sign);

/// Dissipator acting on an operator:
/// -kappa (1 + nbar)(a^dag a X - 2 a X a^dag + X a^dag a) - kappa nbar (a a^dag X - 2 a^dag X a + X a a^dag).
ComplexMatrix lindblad_action(const ComplexMatrix& rho, double kappa, double nbar);

/// Right-hand side of the block equation in the Schroedinger picture,
/// built from dense operator products. Reference for the banded evolution.
ComplexMatrix block_generator_action(const ComplexMatrix& rho, const SystemParams& params, Block block);

/// An oscillator-space block of the joint density matrix.
class BlockDensityMatrix {
 public:
  BlockDensityMatrix(Block block, ComplexMatrix entries);

  Block block() const { return block_; }
  int dim() const { return static_cast<int>(entries_.rows()); }
  const ComplexMatrix& entries() const { return entries_; }
  std::complex<double> trace() const { return entries_.trace(); }
  /// |rho_{dim-1, dim-1}|
  double top_population() const;

  /// Diagonal blocks: Hermitian to 1e-10, unit trace to 1e-8, eigenvalues
  /// >= -1e-10. Throws std::domain_error otherwise.
  void validate() const;

 private:
  Block block_;
  ComplexMatrix entries_;
};

/// Thermal state with mean occupation `mbar`, truncated and renormalized.
ComplexMatrix thermal_matrix(int dim, double mbar);

/// Number-basis matrix of a Gaussian state with isotropic covariance M 1
/// (a displaced thermal state). Anisotropic covariances are rejected.
ComplexMatrix gaussian_state_matrix(int dim, const GaussianState& state);

/// Integrates the block equation from rho(0) = init.entries() to time t.
/// Throws TruncationLeak when the top-level population exceeds the threshold
/// at any sample time.
BlockDensityMatrix evolve_block(const BlockDensityMatrix& init, const SystemParams& params, const OracleConfig& config,
                                double t);

/// Same as evolve_block but reports every sample time.
std::vector<BlockDensityMatrix> evolve_block_series(const BlockDensityMatrix& init, const SystemParams& params,
                                                    const OracleConfig& config, std::span<const double> times);

/// All three blocks at one instant.
struct BlockSnapshot {
  double t;
  BlockDensityMatrix rho00;
  BlockDensityMatrix rho11;
  BlockDensityMatrix rho01;
};

struct OracleTrajectory {
  int dim;
  std::vector<BlockSnapshot> snapshots;
};

/// Evolves rho00, rho11 and rho01 from the product initial state. With
/// config.dim == 0 the truncation doubles until the top level stays below
/// auto_top_population (or, at max_dim, below leak_threshold).
OracleTrajectory evolve_all_blocks(const GaussianState& init, const SystemParams& params, const OracleConfig& config,
                                   std::span<const double> times);

/// Tr[rho exp(i (k x + s p))], using exact number-basis matrix elements of
/// the displacement operator. Accuracy is limited only by the truncation of
/// rho itself.
std::complex<double> chord_from_matrix(const BlockDensityMatrix& rho, const PhaseVector<double>& r);
std::complex<double> chord_from_matrix(const ComplexMatrix& rho, const PhaseVector<double>& r);

/// Wigner function of a (Hermitian) number-basis matrix at x = (q, p).
double wigner_from_matrix(const ComplexMatrix& rho, const PhaseVector<double>& x);

/// (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2 from Hermitian eigendecompositions.
/// Eigenvalues down to -1e-10 are clamped to zero; more negative ones throw.
double uhlmann_fidelity(const ComplexMatrix& rho1, const ComplexMatrix& rho2);
double uhlmann_fidelity(const BlockDensityMatrix& rho1, const BlockDensityMatrix& rho2);

struct ReducedQuantities {
  std::complex<double> coherence;  ///< Tr rho01
  double purity_qubit;
  double purity_oscillator;
  std::optional<WignerGrid> wigner;
};

/// Reduced-state quantities from the three blocks at one instant.
ReducedQuantities reduced_quantities(const BlockSnapshot& blocks, const QubitInitState& qubit,
                                     const std::optional<GridSpec>& grid = std::nullopt);

}  // namespace qprobe

#endif  // QPROBE_FOCK_ORACLE_HPP
