#include "hilbex/config.hpp"

#include <cmath>
#include <fstream>

namespace hilbex {

namespace {

const nlohmann::json* maybe(const nlohmann::json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double num(const nlohmann::json& j, const std::string& path, double fallback) {
  // path is dotted; walks the tree, returns fallback when absent
  const nlohmann::json* cur = &j;
  std::size_t pos = 0;
  std::string rest = path;
  while (true) {
    const std::size_t dot = rest.find('.');
    const std::string key = rest.substr(0, dot);
    const nlohmann::json* nxt = maybe(*cur, key);
    if (!nxt) return fallback;
    if (dot == std::string::npos) {
      if (!nxt->is_number()) throw ConfigError(path, "expected a number");
      return nxt->get<double>();
    }
    cur = nxt;
    rest = rest.substr(dot + 1);
    (void)pos;
  }
}

int integer(const nlohmann::json& j, const std::string& path, int fallback) {
  const double v = num(j, path, static_cast<double>(fallback));
  if (std::abs(v - std::round(v)) > 1e-9) throw ConfigError(path, "expected an integer");
  return static_cast<int>(std::llround(v));
}

void require_positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
}

}  // namespace

EulerInit InitSpec::build() const {
  const double c = center, w = width;
  const bool slope = wall_slope;
  auto bump = [c, w, slope](double x) {
    const double b = std::exp(-((x - c) / w) * ((x - c) / w));
    if (slope) return b;
    return b + std::exp(-((x + c) / w) * ((x + c) / w));
  };
  EulerInit init;
  const double ar = amp_rho, a1 = amp_u1, a2 = amp_u2, a3 = amp_u3, aT = amp_T;
  init.phi0 = [bump, ar](double x) { return ar * bump(x); };
  init.Phi0[0] = [bump, a1](double x) { return a1 * bump(x); };
  init.Phi0[1] = [bump, a2](double x) { return a2 * bump(x); };
  init.Phi0[2] = [c, w, a3](double x) {
    return a3 * (x / c) * std::exp(-((x - c) / w) * ((x - c) / w));
  };
  init.theta0 = [bump, aT](double x) { return aT * bump(x); };
  return init;
}

Scenario parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  const std::string version = j.value("version", "");
  if (version != "hilbex-config/1")
    throw ConfigError("version", "expected \"hilbex-config/1\", got \"" + version + "\"");

  Scenario sc;
  sc.name = j.value("name", std::string("scenario"));
  sc.seed = static_cast<std::uint64_t>(integer(j, "seed", 42));
  sc.output_dir = j.contains("output") ? j["output"].value("directory", std::string("out"))
                                       : std::string("out");

  ExpansionConfig& e = sc.expansion;
  e.velocity_radius = num(j, "velocity_grid.radius", 7.0);
  require_positive(e.velocity_radius, "velocity_grid.radius");
  e.velocity_n = integer(j, "velocity_grid.n_per_axis", 16);
  if (e.velocity_n < 4) throw ConfigError("velocity_grid.n_per_axis", "must be at least 4");
  if (e.velocity_n % 2 != 0)
    throw ConfigError("velocity_grid.n_per_axis",
                      "must be even (odd counts place v3 = 0 on the grid)");
  {
    std::string scheme = "uniform-tensor";
    if (j.contains("velocity_grid")) scheme = j["velocity_grid"].value("scheme", scheme);
    try {
      e.scheme = grid_scheme_from_string(scheme);
    } catch (const std::exception& ex) {
      throw ConfigError("velocity_grid.scheme", ex.what());
    }
  }
  if (j.contains("collision")) {
    try {
      e.backend = CollisionBackend::from_json(j["collision"]);
    } catch (const std::exception& ex) {
      throw ConfigError("collision", ex.what());
    }
  }

  e.spatial.x3_max = num(j, "spatial.x3_max", 20.0);
  require_positive(e.spatial.x3_max, "spatial.x3_max");
  e.spatial.cells = integer(j, "spatial.cells", 320);
  if (e.spatial.cells < 16) throw ConfigError("spatial.cells", "must be at least 16");
  e.spatial.grading = num(j, "spatial.grading", 1.01);
  if (e.spatial.grading < 1.0) throw ConfigError("spatial.grading", "must be >= 1");
  e.spatial.cfl = num(j, "spatial.cfl", 0.4);
  require_positive(e.spatial.cfl, "spatial.cfl");
  if (j.contains("spatial")) {
    const std::string mode = j["spatial"].value("mode", std::string("slab-1d"));
    if (mode == "slab-1d")
      e.spatial.mode = SpatialMode::Slab1D;
    else if (mode == "tangential-fourier")
      e.spatial.mode = SpatialMode::TangentialFourier;
    else
      throw ConfigError("spatial.mode", "must be slab-1d or tangential-fourier");
  }

  e.delta = num(j, "euler.delta", 0.2);
  if (e.delta < 0.0) throw ConfigError("euler.delta", "must be nonnegative");
  e.horizon = num(j, "euler.horizon", 0.4);
  require_positive(e.horizon, "euler.horizon");

  sc.init.center = num(j, "euler.init.center", 1.5);
  require_positive(sc.init.center, "euler.init.center");
  sc.init.width = num(j, "euler.init.width", 0.9);
  require_positive(sc.init.width, "euler.init.width");
  sc.init.amp_rho = num(j, "euler.init.amp.rho", 0.5);
  sc.init.amp_u1 = num(j, "euler.init.amp.u1", 0.4);
  sc.init.amp_u2 = num(j, "euler.init.amp.u2", -0.3);
  sc.init.amp_u3 = num(j, "euler.init.amp.u3", 0.6);
  sc.init.amp_T = num(j, "euler.init.amp.T", 0.5);
  if (j.contains("euler") && j["euler"].contains("init"))
    sc.init.wall_slope = j["euler"]["init"].value("wall_slope", true);

  e.y_max = num(j, "layer.y_max", 24.0);
  if (e.y_max < 20.0) throw ConfigError("layer.y_max", "must be at least 20");
  e.y_cells = integer(j, "layer.cells", 240);
  e.y_grading = num(j, "layer.grading", 1.015);
  e.weight_l = num(j, "layer.weight_l", 3.0);
  if (j.contains("layer")) {
    const std::string m = j["layer"].value("init_mode", std::string("match-neumann"));
    if (m == "match-neumann")
      e.layer_init_match_neumann = true;
    else if (m == "zero")
      e.layer_init_match_neumann = false;
    else
      throw ConfigError("layer.init_mode", "must be match-neumann or zero");
  }

  e.eta_max = num(j, "knudsen.eta_max", 30.0);
  require_positive(e.eta_max, "knudsen.eta_max");
  e.eta_cells = integer(j, "knudsen.cells", 280);
  e.eta_grading = num(j, "knudsen.grading", 1.01);
  e.kappa_w = num(j, "knudsen.kappa", 3.0);
  if (e.kappa_w < 3.0) throw ConfigError("knudsen.kappa", "must be at least 3");
  e.a_frak = num(j, "knudsen.a_frak", 0.3);
  if (!(e.a_frak >= 0.0 && e.a_frak < 0.5))
    throw ConfigError("knudsen.a_frak", "must lie in [0, 1/2)");
  e.knudsen.tol_solve = num(j, "knudsen.tol_solve", 1e-8);
  e.knudsen.max_iter = integer(j, "knudsen.max_iter", 400);

  e.orders = integer(j, "expansion.orders", 2);
  e.taylor_order = integer(j, "expansion.taylor_order", 2);
  e.collar_cells = integer(j, "expansion.collar_cells", 2);
  sc.expansion.threads = integer(j, "threads", 1);

  e.tol.tol_quad = num(j, "tolerances.tol_quad", 1e-6);
  e.tol.tol_solve = num(j, "tolerances.tol_solve", 1e-10);
  e.tol.tol_bc = num(j, "tolerances.tol_bc", 1e-10);
  e.tol.tol_match = num(j, "tolerances.tol_match", 1e-6);
  e.tol.tol_solvability = num(j, "tolerances.tol_solvability", 1e-6);
  e.tol.tol_far = num(j, "tolerances.tol_far", 1e-6);
  e.tol.blowup_ceiling = num(j, "tolerances.blowup_ceiling", 1e3);

  // sweep
  if (j.contains("sweep")) {
    const auto& sw = j["sweep"];
    const std::string p = sw.value("parameter", std::string("epsilon"));
    if (p == "epsilon")
      sc.sweep_parameter = SweepParameter::Epsilon;
    else if (p == "delta")
      sc.sweep_parameter = SweepParameter::Delta;
    else
      throw ConfigError("sweep.parameter", "must be epsilon or delta");
    if (!sw.contains("values") || !sw["values"].is_array())
      throw ConfigError("sweep.values", "expected an array of positive values");
    for (const auto& v : sw["values"]) {
      if (!v.is_number() || !(v.get<double>() > 0.0))
        throw ConfigError("sweep.values", "values must be positive numbers");
      sc.sweep_values.push_back(v.get<double>());
    }
    for (std::size_t i = 1; i < sc.sweep_values.size(); ++i)
      if (sc.sweep_values[i] >= sc.sweep_values[i - 1])
        throw ConfigError("sweep.values", "values must be sorted in descending order");
  } else {
    sc.sweep_values = e.epsilons;
  }
  if (sc.sweep_parameter == SweepParameter::Epsilon && sc.sweep_values.size() >= 3)
    e.epsilons = sc.sweep_values;

  if (j.contains("acoustic_gap")) {
    const auto& ag = j["acoustic_gap"];
    sc.acoustic_enabled = ag.value("enabled", false);
    sc.acoustic_kinetic = ag.value("kinetic", true);
    if (ag.contains("deltas"))
      for (const auto& v : ag["deltas"]) {
        if (!v.is_number() || !(v.get<double>() > 0.0))
          throw ConfigError("acoustic_gap.deltas", "values must be positive numbers");
        sc.acoustic_deltas.push_back(v.get<double>());
      }
  }

  try {
    e.validate();
  } catch (const std::exception& ex) {
    throw ConfigError("expansion", ex.what());
  }

  sc.echo = j;
  sc.config_hash = sha1_hex(j.dump());
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw ConfigError("<file>", std::string("JSON parse failure: ") + ex.what());
  }
  return parse_scenario(j);
}

SlopeFit fit_slope(const std::vector<double>& param, const std::vector<double>& norm) {
  if (param.size() != norm.size()) throw std::invalid_argument("fit_slope: size mismatch");
  if (param.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
  for (std::size_t i = 0; i < param.size(); ++i)
    if (!(param[i] > 0.0) || !(norm[i] > 0.0))
      throw std::invalid_argument("fit_slope: values must be positive");
  return fit_loglog_slope(param, norm);
}

}  // namespace hilbex
