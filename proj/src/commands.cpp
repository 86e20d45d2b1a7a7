#include "qprobe/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <random>

#include "json.hpp"
#include "qprobe/fidelity.hpp"

namespace qprobe {

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::filesystem::path emit(const CommandContext& ctx, const std::string& name, const CsvTable& table) {
  const auto path = ctx.output_dir / name;
  write_csv_file(path, table);
  ctx.out << "wrote " << path.string() << '\n';
  return path;
}

json params_json(const SystemParams& p) {
  return {{"g", p.g}, {"kappa", p.kappa}, {"delta", p.delta}, {"nbar", p.nbar}, {"mbar", p.mbar}};
}

json deviation_json(const PointDeviation& d) {
  return {{"params", params_json(d.point.params)},
          {"t", d.point.t},
          {"qubit", {{"a00", d.point.qubit.a00}, {"a11", d.point.qubit.a11},
                     {"a01", {d.point.qubit.a01.real(), d.point.qubit.a01.imag()}}}},
          {"dim", d.dim},
          {"deviation",
           {{"coherence", d.coherence},
            {"F_gen", d.fidelity_gen},
            {"F_UJ", d.fidelity_uj},
            {"P_q", d.purity_qubit},
            {"P_osc", d.purity_oscillator}}}};
}

json report_json(const EstimateReport& r) {
  return {{"method", to_string(r.method)},
          {"g", r.g},
          {"kappa", r.kappa},
          {"M", r.M},
          {"N", r.N},
          {"nbar", r.nbar()},
          {"standard_error", {{"g", r.g_error}, {"kappa", r.kappa_error}, {"M", r.M_error}, {"N", r.N_error}}},
          {"series_M", r.series_M},
          {"residual_norm", r.residual_norm},
          {"gradient_norm", r.gradient_norm},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

constexpr const char* kFig1Plot = R"(# Plot stub for the fig1 data: reduced Wigner function panels with the
# center trajectories overlaid. Requires numpy and matplotlib.
import sys, pathlib
import numpy as np
import matplotlib.pyplot as plt

here = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")

def meta(path):
    out = {}
    for line in open(path):
        if not line.startswith("#"):
            break
        k, _, v = line[1:].strip().partition("=")
        out[k] = v
    return out

traj = np.genfromtxt(here / "fig1_trajectories.csv", delimiter=",", names=True, comments="#")
fig, axes = plt.subplots(1, 4, figsize=(16, 4))
for ax, t in zip(axes, ["0", "3", "10", "50"]):
    path = here / f"fig1_wigner_t{t}.csv"
    m = meta(path)
    data = np.genfromtxt(path, delimiter=",", names=True, comments="#", deletechars="")
    nq, npts = int(m["nq"]), int(m["np"])
    W = data["W"].reshape(npts, nq)
    ax.imshow(W, origin="lower", cmap="viridis",
              extent=[float(m["q_min"]), float(m["q_max"]), float(m["p_min"]), float(m["p_max"])])
    upto = traj["t"] <= float(t)
    ax.plot(traj["plus_q"][upto], traj["plus_p"][upto], color="green", lw=0.8)
    ax.plot(traj["minus_q"][upto], traj["minus_p"][upto], color="blue", lw=0.8)
    ax.set_title(f"t = {t}")
    ax.set_xlabel("q")
axes[0].set_ylabel("p")
fig.tight_layout()
fig.savefig(here / "fig1.png", dpi=150)
)";

std::string fig23_plot(int figure, std::size_t panels) {
  std::string s = R"(# Plot stub for the fig)" + std::to_string(figure) + R"( data. Requires numpy and matplotlib.
import sys, pathlib
import numpy as np
import matplotlib.pyplot as plt

here = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
panels = )" + std::to_string(panels) +
                  R"(
shades = {"0.05": "#9ecae1", "0.1": "#3182bd", "0.2": "#08306b"}
fig, axes = plt.subplots(1, panels, figsize=(5 * panels, 4), squeeze=False)
for i, ax in enumerate(axes[0]):
    path = here / f"fig)" + std::to_string(figure) +
                  R"(_panel{i}.csv"
    title = [l[1:].strip() for l in open(path) if l.startswith("# mbar") or l.startswith("# nbar")]
    data = np.genfromtxt(path, delimiter=",", names=True, comments="#", deletechars="")
    for name in data.dtype.names[1:]:
        _, g, k = name.rsplit("_", 2)
        ax.plot(data["t"], data[name], color=shades.get(g[1:], "k"),
                ls="-" if k == "k0.01" else "--", label=f"g={g[1:]}, kappa={k[1:]}")
    ax.set_title(", ".join(title))
    ax.set_xlabel("t")
axes[0][0].legend(fontsize=7)
fig.tight_layout()
fig.savefig(here / "fig)" + std::to_string(figure) +
                  R"(.png", dpi=150)
)";
  return s;
}

}  // namespace

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag) {
  std::filesystem::path dir;
  if (flag) {
    dir = *flag;
  } else if (const char* env = std::getenv("QPROBE_OUTPUT_DIR"); env && *env) {
    dir = env;
  } else {
    dir = ".";
  }
  std::filesystem::create_directories(dir);
  return dir;
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

void describe_scenario(const ScenarioConfig& cfg, CsvTable& table) {
  table.set_meta("g", cfg.params.g);
  table.set_meta("kappa", cfg.params.kappa);
  table.set_meta("delta", cfg.params.delta);
  table.set_meta("nbar", cfg.params.nbar);
  if (cfg.temperature) table.set_meta("temperature", *cfg.temperature);
  table.set_meta("N", cfg.params.N());
  const Covariance2& cov = cfg.init.cov;
  if (!cfg.init.center.isZero(0.0)) {
    table.set_meta("init_q0", cfg.init.center(0));
    table.set_meta("init_p0", cfg.init.center(1));
  }
  if (cov.s12() == 0.0 && cov.s11() == cov.s22()) {
    // F_gen depends on the initial covariance only, through M.
    table.set_meta("mbar", cfg.params.mbar);
    table.set_meta("M", cov.s11());
    table.set_meta("M_known", "1");
  } else {
    table.set_meta("init_s11", cov.s11());
    table.set_meta("init_s12", cov.s12());
    table.set_meta("init_s22", cov.s22());
    table.set_meta("M_known", "0");
  }
  table.set_meta("a00", cfg.qubit.a00);
  table.set_meta("a11", cfg.qubit.a11);
  table.set_meta("a01_re", cfg.qubit.a01.real());
  table.set_meta("a01_im", cfg.qubit.a01.imag());
}

CsvTable propagate_table(const ScenarioConfig& cfg, double noise, std::uint64_t seed) {
  cfg.validate();
  if (!(noise >= 0)) throw std::invalid_argument("noise must be >= 0");
  CsvTable table;
  describe_scenario(cfg, table);
  if (noise > 0) {
    table.set_meta("noise", noise);
    table.set_meta("seed", std::to_string(seed));
  }
  table.columns = {"t",      "R11",    "R12",   "R21",          "R22",          "d1",    "d2",
                   "d_norm", "alpha",  "eta1",  "eta2",         "delta",        "Gamma1", "Gamma2",
                   "sigma11", "sigma12", "sigma22", "coherence_re", "coherence_im", "F_gen"};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double t : cfg.times.points()) {
    const PropagatorKernel k = kernel_at(t, cfg.params, cfg.init.cov);
    const std::complex<double> c = coherence_trace(t, cfg.params, cfg.init);
    double f = fidelity_generalized(t, cfg.params, cfg.init);
    if (noise > 0) {
      double factor;
      do factor = 1.0 + noise * gauss(rng);
      while (!(factor > 0));
      f *= factor;
    }
    table.add_row({t,
                   k.fundamental(0, 0),
                   k.fundamental(0, 1),
                   k.fundamental(1, 0),
                   k.fundamental(1, 1),
                   k.separation(0),
                   k.separation(1),
                   k.separation.norm(),
                   k.diffusion,
                   k.shift(0),
                   k.shift(1),
                   k.separation_integral,
                   k.linear_term(0),
                   k.linear_term(1),
                   k.covariance.s11(),
                   k.covariance.s12(),
                   k.covariance.s22(),
                   c.real(),
                   c.imag(),
                   f});
  }
  return table;
}

CsvTable wigner_table(const ScenarioConfig& cfg, double t) {
  cfg.validate();
  const WignerGrid grid = sample_grid(cfg.grid, [&](const PhaseVector<double>& x) {
    return reduced_wigner(x, t, cfg.params, cfg.init, cfg.qubit);
  });
  CsvTable table;
  describe_scenario(cfg, table);
  table.set_meta("t", t);
  table.set_meta("q_min", cfg.grid.q_min);
  table.set_meta("q_max", cfg.grid.q_max);
  table.set_meta("p_min", cfg.grid.p_min);
  table.set_meta("p_max", cfg.grid.p_max);
  table.set_meta("step", cfg.grid.step);
  table.set_meta("nq", std::to_string(grid.nq));
  table.set_meta("np", std::to_string(grid.np));
  table.set_meta("order", "row-major, q fastest");
  table.set_meta("integral", grid.integral());
  table.columns = {"q", "p", "W"};
  table.rows.reserve(grid.values.size());
  for (std::size_t j = 0; j < grid.np; ++j)
    for (std::size_t i = 0; i < grid.nq; ++i) table.rows.push_back({grid.q(i), grid.p(j), grid.at(i, j)});
  return table;
}

CsvTable fidelity_table(const ScenarioConfig& cfg) {
  cfg.validate();
  CsvTable table;
  describe_scenario(cfg, table);
  table.columns = {"t", "F_gen", "F_UJ", "P_q", "P_osc"};
  for (double t : cfg.times.points()) {
    table.add_row({t, fidelity_generalized(t, cfg.params, cfg.init), fidelity_uj_blocks(t, cfg.params, cfg.init),
                   purity_qubit(t, cfg.params, cfg.init, cfg.qubit),
                   purity_oscillator(t, cfg.params, cfg.init, cfg.qubit)});
  }
  return table;
}

int cmd_propagate(const ScenarioConfig& cfg, const CommandContext& ctx, double noise, std::uint64_t seed) {
  emit(ctx, "propagate.csv", propagate_table(cfg, noise, seed));
  return kExitOk;
}

int cmd_wigner(const ScenarioConfig& cfg, const CommandContext& ctx) {
  if (cfg.wigner_times.empty()) throw ConfigError("wigner: no times requested");
  for (double t : cfg.wigner_times) {
    const CsvTable table = wigner_table(cfg, t);
    emit(ctx, "wigner_t" + time_tag(t) + ".csv", table);
  }
  return kExitOk;
}

int cmd_fidelity(const ScenarioConfig& cfg, const CommandContext& ctx) {
  emit(ctx, "fidelity.csv", fidelity_table(cfg));
  return kExitOk;
}

int cmd_oracle(const OracleRunOptions& options, const CommandContext& ctx) {
  const std::vector<ValidationPoint> points =
      options.single ? std::vector<ValidationPoint>{*options.single}
                     : random_validation_points(options.points, options.seed, options.bounds);
  json report;
  report["seed"] = options.seed;
  report["tolerance"] = {{"coherence", options.tolerances.coherence},
                         {"F_gen", options.tolerances.fidelity_gen},
                         {"F_UJ", options.tolerances.fidelity_uj},
                         {"P_q", options.tolerances.purity_qubit},
                         {"P_osc", options.tolerances.purity_oscillator}};
  PointDeviation worst;
  json entries = json::array();
  bool pass = true;
  for (const auto& point : points) {
    PointDeviation d;
    try {
      d = compare_with_oracle(point, options.oracle);
    } catch (const TruncationLeak& leak) {
      report["error"] = {{"kind", "truncation_leak"},
                         {"message", leak.what()},
                         {"dim", leak.dim()},
                         {"population", leak.population()},
                         {"suggested_dim", leak.suggested_dim()},
                         {"params", params_json(point.params)},
                         {"t", point.t}};
      report["pass"] = false;
      write_json(ctx.output_dir / "oracle_report.json", report);
      ctx.err << "oracle: " << leak.what() << '\n';
      return kExitTruncation;
    }
    worst.coherence = std::max(worst.coherence, d.coherence);
    worst.fidelity_gen = std::max(worst.fidelity_gen, d.fidelity_gen);
    worst.fidelity_uj = std::max(worst.fidelity_uj, d.fidelity_uj);
    worst.purity_qubit = std::max(worst.purity_qubit, d.purity_qubit);
    worst.purity_oscillator = std::max(worst.purity_oscillator, d.purity_oscillator);
    pass = pass && within(d, options.tolerances);
    entries.push_back(deviation_json(d));
  }
  report["points"] = entries;
  report["max_deviation"] = {{"coherence", worst.coherence},
                             {"F_gen", worst.fidelity_gen},
                             {"F_UJ", worst.fidelity_uj},
                             {"P_q", worst.purity_qubit},
                             {"P_osc", worst.purity_oscillator}};
  report["pass"] = pass;
  const auto path = ctx.output_dir / "oracle_report.json";
  write_json(path, report);
  ctx.out << "wrote " << path.string() << '\n' << report["max_deviation"].dump() << '\n';
  ctx.out << (pass ? "all deviations within tolerance" : "deviation above tolerance") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_estimate(const std::vector<EstimateInput>& inputs, FitMode mode, const CommandContext& ctx) {
  std::vector<CoherenceSeries> series;
  json sources = json::array();
  for (const auto& input : inputs) {
    CoherenceSeries s = series_from_table(read_csv_file(input.path), input.M);
    if (input.M_unknown) s.M.reset();
    sources.push_back({{"path", input.path.string()}, {"M", s.M ? json(*s.M) : json(nullptr)}});
    series.push_back(std::move(s));
  }
  json doc;
  int status = kExitOk;
  try {
    doc = report_json(fit_parameters(series, mode));
  } catch (const FitNotConverged& e) {
    doc = report_json(e.best());
    doc["error"] = e.what();
    ctx.err << "estimate: " << e.what() << '\n';
    status = kExitCheckFailed;
  }
  doc["inputs"] = sources;
  const auto path = ctx.output_dir / "estimate.json";
  write_json(path, doc);
  ctx.out << "wrote " << path.string() << '\n' << doc.dump(2) << '\n';
  return status;
}

int cmd_reproduce_fig1(const CommandContext& ctx, double grid_step) {
  ScenarioConfig cfg;
  cfg.params.g = 2.5;
  cfg.params.kappa = 0.1;
  cfg.set_temperature(1.0);
  cfg.set_thermal_init(0.0);
  cfg.qubit = QubitInitState::symmetric();
  cfg.grid = GridSpec{-8, 8, -8, 8, grid_step};
  cfg.validate();

  json peaks = json::array();
  for (double t : {0.0, 3.0, 10.0, 50.0}) {
    const CsvTable table = wigner_table(cfg, t);
    emit(ctx, "fig1_wigner_t" + time_tag(t) + ".csv", table);
    const WignerGrid grid = sample_grid(cfg.grid, [&](const PhaseVector<double>& x) {
      return reduced_wigner(x, t, cfg.params, cfg.init, cfg.qubit);
    });
    json found = json::array();
    for (const auto& peak : locate_peaks(grid)) found.push_back({peak.position(0), peak.position(1)});
    const auto minus = diagonal_block_state(t, cfg.params, cfg.init, Block::rho00).center;
    const auto plus = diagonal_block_state(t, cfg.params, cfg.init, Block::rho11).center;
    const auto d = displacement_vector(t, cfg.params);
    peaks.push_back({{"t", t},
                     {"d", {d(0), d(1)}},
                     {"separation", d.norm()},
                     {"analytic_centers", {{minus(0), minus(1)}, {plus(0), plus(1)}}},
                     {"grid_peaks", found}});
  }
  write_json(ctx.output_dir / "fig1_peaks.json", peaks);

  CsvTable traj;
  describe_scenario(cfg, traj);
  traj.columns = {"t", "plus_q", "plus_p", "minus_q", "minus_p", "d1", "d2"};
  for (double t : uniform_grid(0.0, 50.0, 0.05)) {
    // H+ = H_osc + g x drives rho00, whose center is at -d/2.
    const auto c00 = diagonal_block_state(t, cfg.params, cfg.init, Block::rho00).center;
    const auto c11 = diagonal_block_state(t, cfg.params, cfg.init, Block::rho11).center;
    const auto d = displacement_vector(t, cfg.params);
    traj.add_row({t, c00(0), c00(1), c11(0), c11(1), d(0), d(1)});
  }
  emit(ctx, "fig1_trajectories.csv", traj);
  write_text(ctx.output_dir / "fig1_plot.py", kFig1Plot);
  ctx.out << "wrote " << (ctx.output_dir / "fig1_plot.py").string() << '\n';
  return kExitOk;
}

int cmd_reproduce_fig23(int figure, const std::vector<double>& mbar, const std::vector<double>& nbar, double t_max,
                        double step, const CommandContext& ctx) {
  if (figure != 2 && figure != 3) throw std::invalid_argument("figure must be 2 or 3");
  if (mbar.empty() || mbar.size() != nbar.size())
    throw ConfigError("fig" + std::to_string(figure) + ": give one --mbar and one --nbar value per panel");
  const std::vector<double> times = uniform_grid(0.0, t_max, step);
  const double couplings[] = {0.05, 0.1, 0.2};
  const double rates[] = {0.01, 0.1};
  for (std::size_t panel = 0; panel < mbar.size(); ++panel) {
    CsvTable table;
    table.set_meta("figure", std::to_string(figure));
    table.set_meta("quantity", figure == 2 ? "F_gen" : "F_UJ");
    table.set_meta("mbar", mbar[panel]);
    table.set_meta("nbar", nbar[panel]);
    table.columns = {"t"};
    std::vector<SystemParams> curves;
    for (double kappa : rates)
      for (double g : couplings) {
        SystemParams p{g, kappa, 0.0, nbar[panel], mbar[panel]};
        p.validate();
        curves.push_back(p);
        table.columns.push_back(std::string(figure == 2 ? "F_gen" : "F_UJ") + "_g" + time_tag(g) + "_k" +
                                time_tag(kappa));
      }
    for (double t : times) {
      std::vector<double> row{t};
      for (const auto& p : curves) row.push_back(figure == 2 ? fidelity_generalized(t, p) : fidelity_uj_blocks(t, p));
      table.add_row(std::move(row));
    }
    emit(ctx, "fig" + std::to_string(figure) + "_panel" + std::to_string(panel) + ".csv", table);
  }
  const auto stub = ctx.output_dir / ("fig" + std::to_string(figure) + "_plot.py");
  write_text(stub, fig23_plot(figure, mbar.size()));
  ctx.out << "wrote " << stub.string() << '\n';
  return kExitOk;
}

}  // namespace qprobe
