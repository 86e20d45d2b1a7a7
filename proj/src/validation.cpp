#include "qprobe/validation.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "qprobe/fidelity.hpp"

namespace qprobe {

std::vector<ValidationPoint> random_validation_points(int count, std::uint64_t seed, const ValidationBounds& bounds) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // (0, max]: 1 - U with U in [0, 1)
  const auto open_low = [&](double max) { return max * (1.0 - unit(rng)); };
  std::vector<ValidationPoint> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    ValidationPoint p;
    p.params.g = open_low(bounds.g_max);
    p.params.kappa = open_low(bounds.kappa_max);
    p.params.nbar = bounds.nbar_max * unit(rng);
    p.params.mbar = bounds.mbar_max * unit(rng);
    p.params.delta = bounds.delta_max * (2.0 * unit(rng) - 1.0);
    p.t = open_low(bounds.t_max);
    const double a00 = unit(rng);
    const double modulus = std::sqrt(a00 * (1.0 - a00)) * unit(rng);
    p.qubit = QubitInitState(a00, 1.0 - a00, std::polar(modulus, 2.0 * std::numbers::pi * unit(rng)));
    points.push_back(p);
  }
  return points;
}

PointDeviation compare_with_oracle(const ValidationPoint& point, const OracleConfig& config) {
  const SystemParams& params = point.params;
  const GaussianState init = GaussianState::thermal(params.M());
  const double times[] = {point.t};
  const OracleTrajectory trajectory = evolve_all_blocks(init, params, config, times);
  const BlockSnapshot& blocks = trajectory.snapshots.front();
  const ReducedQuantities reduced = reduced_quantities(blocks, point.qubit);

  PointDeviation out;
  out.point = point;
  out.dim = trajectory.dim;
  out.coherence = std::abs(coherence_trace(point.t, params, init) - reduced.coherence);
  out.fidelity_gen = std::abs(fidelity_generalized(point.t, params) - std::norm(reduced.coherence));
  out.fidelity_uj = std::abs(fidelity_uj_blocks(point.t, params) - uhlmann_fidelity(blocks.rho00, blocks.rho11));
  out.purity_qubit = std::abs(purity_qubit(point.t, params, point.qubit) - reduced.purity_qubit);
  out.purity_oscillator = std::abs(purity_oscillator(point.t, params, point.qubit) - reduced.purity_oscillator);
  return out;
}

bool within(const PointDeviation& d, const ValidationTolerances& tol) {
  return d.coherence < tol.coherence && d.fidelity_gen < tol.fidelity_gen && d.fidelity_uj < tol.fidelity_uj &&
         d.purity_qubit < tol.purity_qubit && d.purity_oscillator < tol.purity_oscillator;
}

}  // namespace qprobe
