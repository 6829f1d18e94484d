#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "heatctl/closed_loop.hpp"

namespace heatctl {

/// Declarative experiment configuration. Parsing is strict: unknown keys and
/// out-of-range parameters are rejected.
struct ExperimentConfig {
  RectDomain domain;
  int J = 40;

  double c = 5.0;
  double rho = 2.0;
  double alpha = 0.1;
  std::vector<double> gammas;  // empty: gamma_k = rho + k after N is derived
  bool require_h3 = false;

  CoeffSpec coeffs;

  double theta = 0.5;
  double dt = 0.01;
  double T = 10.0;
  std::uint64_t seed = 12345;
  int mc_paths = 50;

  std::string solver = "etd";
  int picard_max_iters = 40;
  double picard_tol = 1e-10;

  bool feedback_on = true;
  double y0_norm = 1e-3;
  std::string y0_shape = "lowest";  // lowest | seeded | explicit
  std::uint64_t y0_seed = 7;
  std::vector<double> y0_coeffs;

  double series_exponent = 5.0 / 3.0;
  long long series_j_max = 10000;

  std::string out_dir = "out";
  int threads = 0;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Normalized JSON echo of a parsed configuration (deterministic key order).
nlohmann::ordered_json config_echo(const ExperimentConfig& cfg);

/// Initial mode vector per the y0 section.
ModeVector make_y0(const ExperimentConfig& cfg, int J);

/// Gamma constants: configured ones, or rho + k for k = 1..N.
std::vector<double> effective_gammas(const ExperimentConfig& cfg, int N);

/// Simulation settings bundle shared by the solver commands.
SimConfig make_sim_config(const ExperimentConfig& cfg, int J);

} // namespace heatctl
