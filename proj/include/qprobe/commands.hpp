// Subcommand implementations behind the qprobe executable. Each writes its
// files into the output directory and returns a process exit status.
#ifndef QPROBE_COMMANDS_HPP
#define QPROBE_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qprobe/estimation.hpp"
#include "qprobe/scenario.hpp"
#include "qprobe/series_io.hpp"
#include "qprobe/validation.hpp"

namespace qprobe {

/// Exit statuses shared by all subcommands.
enum ExitStatus : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  ///< oracle deviation above tolerance, or a fit that did not converge
  kExitInputError = 2,   ///< bad configuration, input files or degenerate data
  kExitTruncation = 3,   ///< oracle truncation leak
};

struct CommandContext {
  std::filesystem::path output_dir;
  std::ostream& out;
  std::ostream& err;
};

/// `flag` if given, else $QPROBE_OUTPUT_DIR, else the working directory.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag);

/// "3", "0.5", "12.25": compact tag for file names.
std::string time_tag(double t);

/// Parameter and initial-state metadata for CSV headers.
void describe_scenario(const ScenarioConfig& cfg, CsvTable& table);

/// Kernels, coherence and F_gen on the configured time grid. With noise > 0
/// the F_gen column carries multiplicative noise drawn from `seed`.
CsvTable propagate_table(const ScenarioConfig& cfg, double noise = 0.0, std::uint64_t seed = 0);

/// Reduced oscillator Wigner function at time t on cfg.grid, long format
/// (q, p, W) with q fastest.
CsvTable wigner_table(const ScenarioConfig& cfg, double t);

/// Columns t, F_gen, F_UJ, P_q, P_osc.
CsvTable fidelity_table(const ScenarioConfig& cfg);

int cmd_propagate(const ScenarioConfig& cfg, const CommandContext& ctx, double noise = 0.0, std::uint64_t seed = 0);
int cmd_wigner(const ScenarioConfig& cfg, const CommandContext& ctx);
int cmd_fidelity(const ScenarioConfig& cfg, const CommandContext& ctx);

struct OracleRunOptions {
  int points{20};
  std::uint64_t seed{2026};
  ValidationBounds bounds;
  ValidationTolerances tolerances;
  OracleConfig oracle;
  /// Check this single point instead of random ones.
  std::optional<ValidationPoint> single;
};
int cmd_oracle(const OracleRunOptions& options, const CommandContext& ctx);

struct EstimateInput {
  std::filesystem::path path;
  std::optional<double> M;  ///< overrides the file's metadata
  bool M_unknown{false};    ///< ignore any M in the file and estimate it
};
int cmd_estimate(const std::vector<EstimateInput>& inputs, FitMode mode, const CommandContext& ctx);

/// Figure data plus a matplotlib stub. fig2/fig3 need one (mbar, nbar) pair
/// per panel.
int cmd_reproduce_fig1(const CommandContext& ctx, double grid_step = 0.05);
int cmd_reproduce_fig23(int figure, const std::vector<double>& mbar, const std::vector<double>& nbar, double t_max,
                        double step, const CommandContext& ctx);

}  // namespace qprobe

#endif  // QPROBE_COMMANDS_HPP
