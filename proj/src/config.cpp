#include "heatctl/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "heatctl/rng.hpp"

namespace heatctl {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double get_num(const json& obj, const std::string& key, double fallback,
               const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  return obj[key].get<double>();
}

Edge parse_edge(const std::string& name) {
  if (name == "bottom") return Edge::Bottom;
  if (name == "top") return Edge::Top;
  if (name == "left") return Edge::Left;
  if (name == "right") return Edge::Right;
  throw ConfigError("unknown edge '" + name + "'");
}

std::string edge_name(Edge e) {
  switch (e) {
    case Edge::Bottom: return "bottom";
    case Edge::Top: return "top";
    case Edge::Left: return "left";
    default: return "right";
  }
}

std::vector<CoeffTerm> parse_terms(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + " must be an array");
  std::vector<CoeffTerm> out;
  for (const json& t : arr) {
    require_keys(t, where + " term", {"exponent", "amplitude", "kx", "ky"});
    CoeffTerm term;
    term.exponent = get_num(t, "exponent", 0.0, where);
    term.amplitude = get_num(t, "amplitude", 0.0, where);
    term.kx = static_cast<int>(get_num(t, "kx", 0.0, where));
    term.ky = static_cast<int>(get_num(t, "ky", 0.0, where));
    out.push_back(term);
  }
  return out;
}

} // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
  require_keys(doc, "config",
               {"domain", "basis", "design", "coeffs", "noise", "solver", "sim",
                "series", "output"});
  ExperimentConfig cfg;

  // defaults: aspect-sqrt(2) rectangle, three controlled edges
  cfg.domain.Lx = std::numbers::pi;
  cfg.domain.Ly = std::numbers::pi / std::sqrt(2.0);
  cfg.domain.grid_nx = 32;
  cfg.domain.grid_ny = 24;
  cfg.domain.gamma1_edges = {Edge::Bottom, Edge::Top, Edge::Left};

  if (doc.contains("domain")) {
    const json& d = doc["domain"];
    require_keys(d, "domain", {"Lx", "Ly", "grid_nx", "grid_ny", "gamma1_edges"});
    cfg.domain.Lx = get_num(d, "Lx", cfg.domain.Lx, "domain");
    cfg.domain.Ly = get_num(d, "Ly", cfg.domain.Ly, "domain");
    cfg.domain.grid_nx = static_cast<int>(get_num(d, "grid_nx", cfg.domain.grid_nx, "domain"));
    cfg.domain.grid_ny = static_cast<int>(get_num(d, "grid_ny", cfg.domain.grid_ny, "domain"));
    if (d.contains("gamma1_edges")) {
      cfg.domain.gamma1_edges.clear();
      for (const json& e : d["gamma1_edges"])
        cfg.domain.gamma1_edges.push_back(parse_edge(e.get<std::string>()));
    }
  }
  cfg.domain.validate();

  if (doc.contains("basis")) {
    require_keys(doc["basis"], "basis", {"J"});
    cfg.J = static_cast<int>(get_num(doc["basis"], "J", cfg.J, "basis"));
  }
  if (cfg.J < 2) throw ConfigError("basis.J must be >= 2");

  if (doc.contains("design")) {
    const json& d = doc["design"];
    require_keys(d, "design", {"c", "rho", "alpha", "gammas", "require_h3"});
    cfg.c = get_num(d, "c", cfg.c, "design");
    cfg.rho = get_num(d, "rho", cfg.rho, "design");
    cfg.alpha = get_num(d, "alpha", cfg.alpha, "design");
    if (d.contains("gammas")) cfg.gammas = d["gammas"].get<std::vector<double>>();
    if (d.contains("require_h3")) cfg.require_h3 = d["require_h3"].get<bool>();
  }
  if (!(cfg.c >= 0.0)) throw ConfigError("design.c must be nonnegative");
  if (!(cfg.rho > 1.0)) throw ConfigError("design.rho must exceed 1");
  if (!(cfg.alpha >= 0.0)) throw ConfigError("design.alpha must be nonnegative");

  if (doc.contains("coeffs")) {
    const json& d = doc["coeffs"];
    require_keys(d, "coeffs", {"C_a", "a2", "a3"});
    cfg.coeffs.C_a = get_num(d, "C_a", cfg.coeffs.C_a, "coeffs");
    if (d.contains("a2")) cfg.coeffs.a2 = parse_terms(d["a2"], "coeffs.a2");
    if (d.contains("a3")) cfg.coeffs.a3 = parse_terms(d["a3"], "coeffs.a3");
  }
  cfg.coeffs.validate();

  if (doc.contains("noise")) {
    const json& d = doc["noise"];
    require_keys(d, "noise", {"theta", "dt", "T", "seed", "mc_paths"});
    cfg.theta = get_num(d, "theta", cfg.theta, "noise");
    cfg.dt = get_num(d, "dt", cfg.dt, "noise");
    cfg.T = get_num(d, "T", cfg.T, "noise");
    if (d.contains("seed")) cfg.seed = d["seed"].get<std::uint64_t>();
    cfg.mc_paths = static_cast<int>(get_num(d, "mc_paths", cfg.mc_paths, "noise"));
  }
  if (!(cfg.theta >= 0.0)) throw ConfigError("noise.theta must be nonnegative");
  if (!(cfg.dt > 0.0) || !(cfg.T >= cfg.dt))
    throw ConfigError("need noise.dt > 0 and noise.T >= noise.dt");
  if (cfg.mc_paths < 1) throw ConfigError("noise.mc_paths must be >= 1");

  if (doc.contains("solver")) {
    const json& d = doc["solver"];
    require_keys(d, "solver", {"type", "picard_max_iters", "picard_tol", "threads"});
    if (d.contains("type")) cfg.solver = d["type"].get<std::string>();
    cfg.picard_max_iters = static_cast<int>(
        get_num(d, "picard_max_iters", cfg.picard_max_iters, "solver"));
    cfg.picard_tol = get_num(d, "picard_tol", cfg.picard_tol, "solver");
    cfg.threads = static_cast<int>(get_num(d, "threads", cfg.threads, "solver"));
  }
  if (cfg.solver != "etd" && cfg.solver != "picard")
    throw ConfigError("solver.type must be 'etd' or 'picard'");
  if (!(cfg.picard_tol > 0.0)) throw ConfigError("solver.picard_tol must be positive");

  if (doc.contains("sim")) {
    const json& d = doc["sim"];
    require_keys(d, "sim", {"feedback", "y0"});
    if (d.contains("feedback")) cfg.feedback_on = d["feedback"].get<bool>();
    if (d.contains("y0")) {
      const json& y = d["y0"];
      require_keys(y, "sim.y0", {"norm", "shape", "seed", "coeffs"});
      cfg.y0_norm = get_num(y, "norm", cfg.y0_norm, "sim.y0");
      if (y.contains("shape")) cfg.y0_shape = y["shape"].get<std::string>();
      if (y.contains("seed")) cfg.y0_seed = y["seed"].get<std::uint64_t>();
      if (y.contains("coeffs")) {
        cfg.y0_coeffs = y["coeffs"].get<std::vector<double>>();
        cfg.y0_shape = "explicit";
      }
    }
  }
  if (cfg.y0_shape != "lowest" && cfg.y0_shape != "seeded" && cfg.y0_shape != "explicit")
    throw ConfigError("sim.y0.shape must be 'lowest', 'seeded' or 'explicit'");
  if (!(cfg.y0_norm >= 0.0)) throw ConfigError("sim.y0.norm must be nonnegative");

  if (doc.contains("series")) {
    const json& d = doc["series"];
    require_keys(d, "series", {"exponent", "j_max"});
    cfg.series_exponent = get_num(d, "exponent", cfg.series_exponent, "series");
    cfg.series_j_max = static_cast<long long>(get_num(d, "j_max",
                                                      static_cast<double>(cfg.series_j_max),
                                                      "series"));
  }
  if (!(cfg.series_exponent > 0.0)) throw ConfigError("series.exponent must be positive");
  if (cfg.series_j_max < 100) throw ConfigError("series.j_max must be >= 100");

  if (doc.contains("output")) {
    const json& d = doc["output"];
    require_keys(d, "output", {"dir"});
    if (d.contains("dir")) cfg.out_dir = d["dir"].get<std::string>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json config_echo(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["domain"] = {{"Lx", cfg.domain.Lx},
                 {"Ly", cfg.domain.Ly},
                 {"grid_nx", cfg.domain.grid_nx},
                 {"grid_ny", cfg.domain.grid_ny}};
  std::vector<std::string> edges;
  for (Edge e : cfg.domain.gamma1_edges) edges.push_back(edge_name(e));
  j["domain"]["gamma1_edges"] = edges;
  j["basis"] = {{"J", cfg.J}};
  j["design"] = {{"c", cfg.c},
                 {"rho", cfg.rho},
                 {"alpha", cfg.alpha},
                 {"gammas", cfg.gammas},
                 {"require_h3", cfg.require_h3}};
  auto terms = [](const std::vector<CoeffTerm>& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const CoeffTerm& t : v)
      arr.push_back({{"exponent", t.exponent},
                     {"amplitude", t.amplitude},
                     {"kx", t.kx},
                     {"ky", t.ky}});
    return arr;
  };
  j["coeffs"] = {{"C_a", cfg.coeffs.C_a},
                 {"a2", terms(cfg.coeffs.a2)},
                 {"a3", terms(cfg.coeffs.a3)}};
  j["noise"] = {{"theta", cfg.theta},
                {"dt", cfg.dt},
                {"T", cfg.T},
                {"seed", cfg.seed},
                {"mc_paths", cfg.mc_paths}};
  j["solver"] = {{"type", cfg.solver},
                 {"picard_max_iters", cfg.picard_max_iters},
                 {"picard_tol", cfg.picard_tol},
                 {"threads", cfg.threads}};
  j["sim"] = {{"feedback", cfg.feedback_on},
              {"y0", {{"norm", cfg.y0_norm},
                      {"shape", cfg.y0_shape},
                      {"seed", cfg.y0_seed},
                      {"coeffs", cfg.y0_coeffs}}}};
  j["series"] = {{"exponent", cfg.series_exponent}, {"j_max", cfg.series_j_max}};
  j["output"] = {{"dir", cfg.out_dir}};
  return j;
}

ModeVector make_y0(const ExperimentConfig& cfg, int J) {
  if (cfg.y0_shape == "explicit") {
    if (static_cast<int>(cfg.y0_coeffs.size()) != J)
      throw ConfigError("sim.y0.coeffs length must equal basis.J");
    return Eigen::Map<const Eigen::VectorXd>(cfg.y0_coeffs.data(), J);
  }
  ModeVector y0 = ModeVector::Zero(J);
  if (cfg.y0_shape == "lowest") {
    y0(0) = cfg.y0_norm;
    return y0;
  }
  Rng rng(cfg.y0_seed);
  for (int j = 0; j < J; ++j) y0(j) = rng.normal();
  const double n = y0.norm();
  if (n > 0.0) y0 *= cfg.y0_norm / n;
  return y0;
}

std::vector<double> effective_gammas(const ExperimentConfig& cfg, int N) {
  if (!cfg.gammas.empty()) return cfg.gammas;
  std::vector<double> g(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) g[static_cast<size_t>(k)] = cfg.rho + (k + 1);
  return g;
}

SimConfig make_sim_config(const ExperimentConfig& cfg, int J) {
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.T = cfg.T;
  sim.alpha = cfg.alpha;
  sim.theta = cfg.theta;
  sim.seed = cfg.seed;
  sim.mc_paths = cfg.mc_paths;
  sim.coeffs = cfg.coeffs;
  sim.y0 = make_y0(cfg, J);
  sim.feedback_on = cfg.feedback_on;
  sim.solver = cfg.solver;
  sim.picard_max_iters = cfg.picard_max_iters;
  sim.picard_tol = cfg.picard_tol;
  sim.threads = cfg.threads;
  return sim;
}

} // namespace heatctl
