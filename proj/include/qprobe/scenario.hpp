// Scenario configuration: parameters, initial state, time grid, Wigner grid
// and oracle settings, loaded from JSON.
#ifndef QPROBE_SCENARIO_HPP
#define QPROBE_SCENARIO_HPP

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qprobe/fock_oracle.hpp"
#include "qprobe/wigner_grid.hpp"

namespace qprobe {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Either an explicit list or t_min, t_min + step, ..., t_max.
struct TimeGrid {
  double t_min{0};
  double t_max{20};
  double step{0.05};
  std::vector<double> explicit_points;

  std::vector<double> points() const;
  void validate() const;
};

struct ScenarioConfig {
  SystemParams params;
  /// Set when the bath was given as a temperature D; params.nbar then holds
  /// the derived occupation.
  std::optional<double> temperature;
  GaussianState init{GaussianState::vacuum()};
  QubitInitState qubit;
  TimeGrid times;
  GridSpec grid;
  std::vector<double> wigner_times{0, 3, 10, 50};
  OracleConfig oracle;

  /// Sets the bath from a temperature (nbar derived).
  void set_temperature(double D);
  /// Thermal initial state with occupation mbar; keeps params.mbar in sync.
  void set_thermal_init(double mbar);
  bool thermal_init() const;
  void validate() const;
};

/// JSON schema (every key optional, unknown keys rejected):
///   params: {g, kappa, delta, nbar | temperature}
///   init:   {mbar} | {center: [q, p], cov: [s11, s12, s22]} | {center, mbar}
///   qubit:  {a00, a11, a01: [re, im]}
///   times:  {t_min, t_max, step} | [t0, t1, ...]
///   grid:   {q_min, q_max, p_min, p_max, step}
///   wigner_times: [t0, ...]
///   oracle: {dim, rel_tol, abs_tol, leak_threshold, auto_top_population, max_dim}
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace qprobe

#endif  // QPROBE_SCENARIO_HPP
