#include "qprobe/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace qprobe {

namespace {

using nlohmann::json;

void require_keys(const json& node, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!node.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : node.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError(path + "." + key + ": unknown key");
  }
}

double number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ConfigError(path + ": expected a number");
  return node.get<double>();
}

int integer(const json& node, const std::string& path) {
  if (!node.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return node.get<int>();
}

std::vector<double> number_list(const json& node, const std::string& path, std::size_t expected = 0) {
  if (!node.is_array()) throw ConfigError(path + ": expected an array of numbers");
  if (expected && node.size() != expected)
    throw ConfigError(path + ": expected " + std::to_string(expected) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename Fn>
void rethrow_as_config(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void parse_params(const json& node, ScenarioConfig& cfg) {
  require_keys(node, "params", {"g", "kappa", "delta", "nbar", "temperature"});
  if (node.contains("nbar") && node.contains("temperature"))
    throw ConfigError("params: give either nbar or temperature, not both");
  if (node.contains("g")) cfg.params.g = number(node["g"], "params.g");
  if (node.contains("kappa")) cfg.params.kappa = number(node["kappa"], "params.kappa");
  if (node.contains("delta")) cfg.params.delta = number(node["delta"], "params.delta");
  if (node.contains("nbar")) cfg.params.nbar = number(node["nbar"], "params.nbar");
  if (node.contains("temperature"))
    rethrow_as_config("params.temperature", [&] { cfg.set_temperature(number(node["temperature"], "params.temperature")); });
}

void parse_init(const json& node, ScenarioConfig& cfg) {
  require_keys(node, "init", {"mbar", "center", "cov"});
  if (node.contains("mbar") && node.contains("cov")) throw ConfigError("init: give either mbar or cov, not both");
  rethrow_as_config("init", [&] {
    if (node.contains("cov")) {
      const auto c = number_list(node["cov"], "init.cov", 3);
      cfg.init.cov = Covariance2(c[0], c[1], c[2]);
      cfg.params.mbar = std::sqrt(cfg.init.cov.determinant()) - 0.5;
    } else {
      cfg.set_thermal_init(node.contains("mbar") ? number(node["mbar"], "init.mbar") : 0.0);
    }
    if (node.contains("center")) {
      const auto c = number_list(node["center"], "init.center", 2);
      cfg.init.center = PhaseVector<double>(c[0], c[1]);
    }
  });
}

void parse_qubit(const json& node, ScenarioConfig& cfg) {
  require_keys(node, "qubit", {"a00", "a11", "a01"});
  const double a00 = node.contains("a00") ? number(node["a00"], "qubit.a00") : 0.5;
  const double a11 = node.contains("a11") ? number(node["a11"], "qubit.a11") : 1.0 - a00;
  std::complex<double> a01{0.5, 0.0};
  if (node.contains("a01")) {
    const auto c = number_list(node["a01"], "qubit.a01", 2);
    a01 = {c[0], c[1]};
  }
  rethrow_as_config("qubit", [&] { cfg.qubit = QubitInitState(a00, a11, a01); });
}

void parse_times(const json& node, TimeGrid& grid, const std::string& path) {
  if (node.is_array()) {
    grid.explicit_points = number_list(node, path);
    return;
  }
  require_keys(node, path, {"t_min", "t_max", "step"});
  if (node.contains("t_min")) grid.t_min = number(node["t_min"], path + ".t_min");
  if (node.contains("t_max")) grid.t_max = number(node["t_max"], path + ".t_max");
  if (node.contains("step")) grid.step = number(node["step"], path + ".step");
}

void parse_grid(const json& node, GridSpec& grid) {
  require_keys(node, "grid", {"q_min", "q_max", "p_min", "p_max", "step"});
  if (node.contains("q_min")) grid.q_min = number(node["q_min"], "grid.q_min");
  if (node.contains("q_max")) grid.q_max = number(node["q_max"], "grid.q_max");
  if (node.contains("p_min")) grid.p_min = number(node["p_min"], "grid.p_min");
  if (node.contains("p_max")) grid.p_max = number(node["p_max"], "grid.p_max");
  if (node.contains("step")) grid.step = number(node["step"], "grid.step");
}

void parse_oracle(const json& node, OracleConfig& oracle) {
  require_keys(node, "oracle", {"dim", "rel_tol", "abs_tol", "leak_threshold", "auto_top_population", "max_dim"});
  if (node.contains("dim")) oracle.dim = integer(node["dim"], "oracle.dim");
  if (node.contains("rel_tol")) oracle.rel_tol = number(node["rel_tol"], "oracle.rel_tol");
  if (node.contains("abs_tol")) oracle.abs_tol = number(node["abs_tol"], "oracle.abs_tol");
  if (node.contains("leak_threshold")) oracle.leak_threshold = number(node["leak_threshold"], "oracle.leak_threshold");
  if (node.contains("auto_top_population"))
    oracle.auto_top_population = number(node["auto_top_population"], "oracle.auto_top_population");
  if (node.contains("max_dim")) oracle.max_dim = integer(node["max_dim"], "oracle.max_dim");
}

}  // namespace

std::vector<double> TimeGrid::points() const {
  validate();
  if (!explicit_points.empty()) return explicit_points;
  const long count = static_cast<long>(std::floor((t_max - t_min) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (long i = 0; i < count; ++i) out[i] = t_min + static_cast<double>(i) * step;
  return out;
}

void TimeGrid::validate() const {
  if (!explicit_points.empty()) {
    for (std::size_t i = 0; i < explicit_points.size(); ++i) {
      if (!(explicit_points[i] >= 0) || !std::isfinite(explicit_points[i]))
        throw ConfigError("times: entries must be finite and >= 0");
      if (i > 0 && !(explicit_points[i] > explicit_points[i - 1]))
        throw ConfigError("times: entries must be strictly increasing");
    }
    return;
  }
  if (!(t_min >= 0) || !(t_max >= t_min) || !std::isfinite(t_max)) throw ConfigError("times: need 0 <= t_min <= t_max");
  if (!(step > 0)) throw ConfigError("times: step must be > 0");
  if ((t_max - t_min) / step > 1e7) throw ConfigError("times: more than 1e7 samples requested");
}

void ScenarioConfig::set_temperature(double D) {
  params.nbar = occupation_from_temperature(D);
  temperature = D;
}

void ScenarioConfig::set_thermal_init(double mbar) {
  if (!(mbar >= 0)) throw ConfigError("init.mbar must be >= 0");
  params.mbar = mbar;
  init = GaussianState::thermal(mbar + 0.5);
}

bool ScenarioConfig::thermal_init() const {
  const Covariance2& c = init.cov;
  return init.center.isZero(0.0) && c.s12() == 0.0 && c.s11() == c.s22();
}

void ScenarioConfig::validate() const {
  rethrow_as_config("params", [&] { params.validate(); });
  times.validate();
  rethrow_as_config("grid", [&] { grid.validate(); });
  for (double t : wigner_times)
    if (!(t >= 0) || !std::isfinite(t)) throw ConfigError("wigner_times: entries must be finite and >= 0");
  rethrow_as_config("oracle", [&] { oracle.validate(); });
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  ScenarioConfig cfg;
  try {
    require_keys(doc, "config", {"params", "init", "qubit", "times", "grid", "wigner_times", "oracle"});
    if (doc.contains("params")) parse_params(doc["params"], cfg);
    if (doc.contains("init")) parse_init(doc["init"], cfg);
    if (doc.contains("qubit")) parse_qubit(doc["qubit"], cfg);
    if (doc.contains("times")) parse_times(doc["times"], cfg.times, "times");
    if (doc.contains("grid")) parse_grid(doc["grid"], cfg.grid);
    if (doc.contains("wigner_times")) cfg.wigner_times = number_list(doc["wigner_times"], "wigner_times");
    if (doc.contains("oracle")) parse_oracle(doc["oracle"], cfg.oracle);
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace qprobe
