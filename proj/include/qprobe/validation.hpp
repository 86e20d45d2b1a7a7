// Analytic-versus-oracle comparison at sampled parameter points.
#ifndef QPROBE_VALIDATION_HPP
#define QPROBE_VALIDATION_HPP

#include <cstdint>
#include <vector>

#include "qprobe/fock_oracle.hpp"

namespace qprobe {

struct ValidationPoint {
  SystemParams params;
  QubitInitState qubit;
  double t{0};
};

/// Sampling box for random points. g, kappa and t are drawn from (0, max],
/// the occupations from [0, max], delta from [-delta_max, delta_max].
struct ValidationBounds {
  double g_max{0.3};
  double kappa_max{0.2};
  double nbar_max{2.0};
  double mbar_max{2.0};
  double t_max{20.0};
  double delta_max{1.0};
};

std::vector<ValidationPoint> random_validation_points(int count, std::uint64_t seed, const ValidationBounds& bounds = {});

/// Absolute analytic-minus-oracle deviations at one point.
struct PointDeviation {
  ValidationPoint point;
  int dim{0};
  double coherence{0};  ///< |Tr rho01 difference|
  double fidelity_gen{0};
  double fidelity_uj{0};
  double purity_qubit{0};
  double purity_oscillator{0};
};

struct ValidationTolerances {
  double coherence{1e-6};
  double fidelity_gen{1e-6};
  double fidelity_uj{1e-5};
  double purity_qubit{1e-6};
  double purity_oscillator{1e-6};
};

/// Evolves the thermal initial state (M = params.M()) with the oracle and
/// compares every closed form. Throws TruncationLeak from the oracle.
PointDeviation compare_with_oracle(const ValidationPoint& point, const OracleConfig& config = {});

bool within(const PointDeviation& deviation, const ValidationTolerances& tol);

}  // namespace qprobe

#endif  // QPROBE_VALIDATION_HPP
