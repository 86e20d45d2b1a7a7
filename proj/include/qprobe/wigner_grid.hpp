// Sampled Wigner fields on rectangular phase-space grids.
#ifndef QPROBE_WIGNER_GRID_HPP
#define QPROBE_WIGNER_GRID_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qprobe/phase_space.hpp"

namespace qprobe {

struct GridSpec {
  double q_min{-6}, q_max{6};
  double p_min{-6}, p_max{6};
  double step{0.05};

  static constexpr std::size_t kMaxPoints = 10'000'000;

  std::size_t nq() const { return static_cast<std::size_t>(std::llround((q_max - q_min) / step)) + 1; }
  std::size_t np() const { return static_cast<std::size_t>(std::llround((p_max - p_min) / step)) + 1; }

  void validate() const {
    if (!(step > 0) || !std::isfinite(step)) throw std::invalid_argument("GridSpec: step must be positive");
    if (!(q_max > q_min) || !(p_max > p_min) || !std::isfinite(q_min + q_max + p_min + p_max))
      throw std::invalid_argument("GridSpec: bounds must be finite with max > min");
    const double points = ((q_max - q_min) / step + 1) * ((p_max - p_min) / step + 1);
    if (points > static_cast<double>(kMaxPoints)) throw std::invalid_argument("GridSpec: grid exceeds 1e7 points");
  }
};

/// Row-major samples with q varying fastest: values[j * nq + i] = W(q_i, p_j).
struct WignerGrid {
  GridSpec spec;
  std::size_t nq{0}, np{0};
  std::vector<double> values;

  double q(std::size_t i) const { return spec.q_min + static_cast<double>(i) * spec.step; }
  double p(std::size_t j) const { return spec.p_min + static_cast<double>(j) * spec.step; }
  double at(std::size_t i, std::size_t j) const { return values[j * nq + i]; }

  /// Riemann sum times cell area.
  double integral() const {
    double sum = 0;
    for (double v : values) sum += v;
    return sum * spec.step * spec.step;
  }
};

template <typename Field>
WignerGrid sample_grid(const GridSpec& spec, Field&& field) {
  spec.validate();
  WignerGrid grid{spec, spec.nq(), spec.np(), {}};
  grid.values.resize(grid.nq * grid.np);
  for (std::size_t j = 0; j < grid.np; ++j)
    for (std::size_t i = 0; i < grid.nq; ++i)
      grid.values[j * grid.nq + i] = field(PhaseVector<double>(grid.q(i), grid.p(j)));
  return grid;
}

struct GridPeak {
  PhaseVector<double> position;
  double value;
};

/// Strict local maxima above `min_fraction` of the global maximum, refined to
/// sub-grid accuracy by fitting a parabola to log W through the 3-point
/// stencil along each axis. Sorted by decreasing value.
std::vector<GridPeak> locate_peaks(const WignerGrid& grid, double min_fraction = 0.05);

}  // namespace qprobe

#endif  // QPROBE_WIGNER_GRID_HPP
