#include "qprobe/wigner_grid.hpp"

#include <algorithm>

namespace qprobe {

namespace {

// Vertex offset (in units of the step) of the parabola through (-1, a), (0, b), (1, c).
double parabola_offset(double a, double b, double c) {
  const double curvature = a - 2.0 * b + c;
  if (curvature >= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
}

}  // namespace

std::vector<GridPeak> locate_peaks(const WignerGrid& grid, double min_fraction) {
  std::vector<GridPeak> peaks;
  if (grid.nq < 3 || grid.np < 3) return peaks;
  const double global = *std::max_element(grid.values.begin(), grid.values.end());
  if (!(global > 0.0)) return peaks;
  const double floor = min_fraction * global;

  for (std::size_t j = 1; j + 1 < grid.np; ++j) {
    for (std::size_t i = 1; i + 1 < grid.nq; ++i) {
      const double v = grid.at(i, j);
      if (v < floor) continue;
      bool is_max = true;
      for (int dj = -1; dj <= 1 && is_max; ++dj)
        for (int di = -1; di <= 1 && is_max; ++di) {
          if (di == 0 && dj == 0) continue;
          const double w = grid.at(i + di, j + dj);
          // Ties are broken toward the lower index so a plateau yields one peak.
          if (w > v || (w == v && (dj < 0 || (dj == 0 && di < 0)))) is_max = false;
        }
      if (!is_max) continue;

      const double left = grid.at(i - 1, j), right = grid.at(i + 1, j);
      const double down = grid.at(i, j - 1), up = grid.at(i, j + 1);
      double dq = 0.0, dp = 0.0;
      if (left > 0 && right > 0 && down > 0 && up > 0) {
        // A Gaussian is exactly a parabola in log space.
        const double lv = std::log(v);
        dq = parabola_offset(std::log(left), lv, std::log(right));
        dp = parabola_offset(std::log(down), lv, std::log(up));
      }
      peaks.push_back({PhaseVector<double>(grid.q(i) + dq * grid.spec.step, grid.p(j) + dp * grid.spec.step), v});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const GridPeak& a, const GridPeak& b) { return a.value > b.value; });
  return peaks;
}

}  // namespace qprobe
