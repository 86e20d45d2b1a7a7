// qprobe: command-line front end.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qprobe/commands.hpp"

using namespace qprobe;

namespace {

/// Flags shared by the scenario-driven subcommands. Values given on the
/// command line win over the --config file.
struct ScenarioFlags {
  std::optional<double> g, kappa, delta, nbar, temperature, mbar, q0, p0;
  std::optional<double> a00, a01_re, a01_im;
  std::optional<double> t_min, t_max, dt;
  std::vector<double> times;
  std::optional<double> q_min, q_max, p_min, p_max, grid_step;
  std::vector<double> wigner_times;
  std::optional<int> dim;

  void attach(CLI::App* app, bool with_grid) {
    app->add_option("--g", g, "qubit-oscillator coupling");
    app->add_option("--kappa", kappa, "dissipation rate");
    app->add_option("--delta", delta, "qubit splitting");
    auto* n = app->add_option("--nbar", nbar, "bath mean occupation");
    auto* d = app->add_option("--temperature,-D", temperature, "bath temperature D (sets nbar)");
    n->excludes(d);
    app->add_option("--mbar", mbar, "initial thermal occupation");
    app->add_option("--q0", q0, "initial center q");
    app->add_option("--p0", p0, "initial center p");
    app->add_option("--a00", a00, "qubit population a00 (a11 = 1 - a00)");
    app->add_option("--a01-re", a01_re, "qubit coherence, real part");
    app->add_option("--a01-im", a01_im, "qubit coherence, imaginary part");
    app->add_option("--t-min", t_min, "first time");
    app->add_option("--t-max", t_max, "last time");
    app->add_option("--dt", dt, "time step");
    app->add_option("--times", times, "explicit time list (overrides the grid)");
    if (with_grid) {
      app->add_option("--q-min", q_min);
      app->add_option("--q-max", q_max);
      app->add_option("--p-min", p_min);
      app->add_option("--p-max", p_max);
      app->add_option("--grid-step", grid_step, "Wigner grid spacing");
      app->add_option("--at", wigner_times, "Wigner snapshot times");
    }
    app->add_option("--dim", dim, "oracle truncation (0 = automatic)");
  }

  void apply(ScenarioConfig& cfg) const {
    if (g) cfg.params.g = *g;
    if (kappa) cfg.params.kappa = *kappa;
    if (delta) cfg.params.delta = *delta;
    if (nbar) {
      cfg.params.nbar = *nbar;
      cfg.temperature.reset();
    }
    if (temperature) cfg.set_temperature(*temperature);
    if (mbar) {
      const PhaseVector<double> center = cfg.init.center;
      cfg.set_thermal_init(*mbar);
      cfg.init.center = center;
    }
    if (q0) cfg.init.center(0) = *q0;
    if (p0) cfg.init.center(1) = *p0;
    if (a00 || a01_re || a01_im) {
      const double p = a00.value_or(cfg.qubit.a00);
      const std::complex<double> c(a01_re.value_or(cfg.qubit.a01.real()), a01_im.value_or(cfg.qubit.a01.imag()));
      cfg.qubit = QubitInitState(p, 1.0 - p, c);
    }
    if (t_min) cfg.times.t_min = *t_min;
    if (t_max) cfg.times.t_max = *t_max;
    if (dt) cfg.times.step = *dt;
    if (!times.empty()) cfg.times.explicit_points = times;
    if (q_min) cfg.grid.q_min = *q_min;
    if (q_max) cfg.grid.q_max = *q_max;
    if (p_min) cfg.grid.p_min = *p_min;
    if (p_max) cfg.grid.p_max = *p_max;
    if (grid_step) cfg.grid.step = *grid_step;
    if (!wigner_times.empty()) cfg.wigner_times = wigner_times;
    if (dim) cfg.oracle.dim = *dim;
    cfg.validate();
  }
};

EstimateInput parse_series_arg(const std::string& arg) {
  EstimateInput input;
  const auto colon = arg.rfind(':');
  if (colon == std::string::npos) {
    input.path = arg;
    return input;
  }
  input.path = arg.substr(0, colon);
  const std::string m = arg.substr(colon + 1);
  if (m == "?") {
    input.M_unknown = true;
  } else {
    try {
      std::size_t used = 0;
      input.M = std::stod(m, &used);
      if (used != m.size()) throw std::invalid_argument(m);
    } catch (const std::exception&) {
      throw ConfigError("--series " + arg + ": expected FILE, FILE:M or FILE:?");
    }
  }
  return input;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Qubit probe of a damped oscillator: closed-form propagation, fidelities, Fock-basis oracle and "
               "parameter estimation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> output_dir, config_path;
  app.add_option("--output-dir,-o", output_dir, "output directory (default: $QPROBE_OUTPUT_DIR or .)");
  app.add_option("--config,-c", config_path, "JSON scenario file")->check(CLI::ExistingFile);

  ScenarioFlags propagate_flags, wigner_flags, fidelity_flags, oracle_flags;
  double noise = 0.0;
  std::uint64_t seed = 0;

  auto* propagate = app.add_subcommand("propagate", "kernels, coherence and F_gen on a time grid");
  propagate_flags.attach(propagate, false);
  propagate->add_option("--noise", noise, "multiplicative noise level on F_gen")->check(CLI::NonNegativeNumber);
  propagate->add_option("--seed", seed, "noise seed");

  auto* wigner = app.add_subcommand("wigner", "reduced oscillator Wigner grids");
  wigner_flags.attach(wigner, true);

  auto* fidelity = app.add_subcommand("fidelity", "F_gen, F_UJ and purities on a time grid");
  fidelity_flags.attach(fidelity, false);

  auto* oracle = app.add_subcommand("oracle", "compare closed forms with the Fock-basis integrator");
  oracle_flags.attach(oracle, false);
  OracleRunOptions oracle_options;
  bool single = false;
  double single_t = 5.0;
  oracle->add_option("--points", oracle_options.points, "random parameter points")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_options.seed, "sampling seed");
  oracle->add_flag("--single", single, "check only the configured point at --t");
  oracle->add_option("--t", single_t, "time for --single")->check(CLI::NonNegativeNumber);
  oracle->add_option("--max-dim", oracle_options.oracle.max_dim, "largest automatic truncation");

  auto* estimate = app.add_subcommand("estimate", "fit (g, kappa, M, N) to F_gen series");
  std::vector<std::string> series_args;
  std::string mode_name = "direct";
  estimate->add_option("--series,-s", series_args, "FILE, FILE:M (known M) or FILE:? (estimate M)")->required();
  estimate->add_option("--mode", mode_name, "direct or two-temperature");

  auto* reproduce = app.add_subcommand("reproduce", "figure data with plotting stubs");
  reproduce->require_subcommand(1);
  reproduce->fallthrough();
  double fig1_step = 0.05;
  auto* fig1 = reproduce->add_subcommand("fig1", "Wigner snapshots at g=2.5, kappa=0.1, D=1");
  fig1->add_option("--grid-step", fig1_step)->check(CLI::PositiveNumber);
  std::vector<double> panel_mbar, panel_nbar;
  double fig_t_max = 100.0, fig_dt = 0.05;
  auto* fig2 = reproduce->add_subcommand("fig2", "F_gen curves, one panel per (mbar, nbar)");
  auto* fig3 = reproduce->add_subcommand("fig3", "F_UJ curves, one panel per (mbar, nbar)");
  for (auto* fig : {fig2, fig3}) {
    fig->add_option("--mbar", panel_mbar, "initial occupation per panel")->required();
    fig->add_option("--nbar", panel_nbar, "bath occupation per panel")->required();
    fig->add_option("--t-max", fig_t_max)->check(CLI::PositiveNumber);
    fig->add_option("--dt", fig_dt)->check(CLI::PositiveNumber);
  }

  for (auto* fig : {fig1, fig2, fig3}) fig->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  try {
    const CommandContext ctx{resolve_output_dir(output_dir), std::cout, std::cerr};
    ScenarioConfig cfg = config_path ? load_scenario(*config_path) : ScenarioConfig{};
    if (*propagate) {
      propagate_flags.apply(cfg);
      return cmd_propagate(cfg, ctx, noise, seed);
    }
    if (*wigner) {
      wigner_flags.apply(cfg);
      return cmd_wigner(cfg, ctx);
    }
    if (*fidelity) {
      fidelity_flags.apply(cfg);
      return cmd_fidelity(cfg, ctx);
    }
    if (*oracle) {
      oracle_flags.apply(cfg);
      oracle_options.oracle.dim = cfg.oracle.dim;
      oracle_options.oracle.rel_tol = cfg.oracle.rel_tol;
      oracle_options.oracle.abs_tol = cfg.oracle.abs_tol;
      oracle_options.oracle.leak_threshold = cfg.oracle.leak_threshold;
      oracle_options.oracle.auto_top_population = cfg.oracle.auto_top_population;
      if (!oracle->get_option("--max-dim")->count()) oracle_options.oracle.max_dim = cfg.oracle.max_dim;
      if (single) {
        if (!cfg.thermal_init()) throw ConfigError("oracle --single needs a thermal initial state");
        oracle_options.single = ValidationPoint{cfg.params, cfg.qubit, single_t};
      }
      return cmd_oracle(oracle_options, ctx);
    }
    if (*estimate) {
      std::vector<EstimateInput> inputs;
      for (const auto& arg : series_args) inputs.push_back(parse_series_arg(arg));
      return cmd_estimate(inputs, fit_mode_from_string(mode_name), ctx);
    }
    if (*fig1) return cmd_reproduce_fig1(ctx, fig1_step);
    if (*fig2) return cmd_reproduce_fig23(2, panel_mbar, panel_nbar, fig_t_max, fig_dt, ctx);
    if (*fig3) return cmd_reproduce_fig23(3, panel_mbar, panel_nbar, fig_t_max, fig_dt, ctx);
  } catch (const TruncationLeak& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTruncation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}
