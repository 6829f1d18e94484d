#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "heatctl/commands.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int paths = -1;
  bool quiet = false;
};

void add_common(CLI::App* sub, CliArgs& args) {
  sub->add_option("--config", args.config_path, "experiment configuration (JSON)")
      ->required();
  sub->add_option("--out", args.out_dir, "output directory (overrides config)");
  sub->add_option("--seed", args.seed, "base RNG seed (overrides config)");
  sub->add_option("--paths", args.paths, "Monte Carlo path count (overrides config)");
  sub->add_flag("--quiet", args.quiet, "suppress progress output");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"heatctl: boundary feedback stabilization lab for the cubic "
               "stochastic heat equation on rectangles"};
  app.require_subcommand(1);

  CliArgs args;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"audit", "run the hypothesis audits"},
      {"design", "assemble and serialize the feedback design"},
      {"kernel", "build the linear kernel and audit its decay"},
      {"simulate", "exponential time stepping of the closed loop"},
      {"picard", "fixed-point iteration of the mild solution"},
      {"mc", "Monte Carlo ensemble over noise paths"},
  };
  for (const auto& [name, desc] : subs) add_common(app.add_subcommand(name, desc), args);

  CLI11_PARSE(app, argc, argv);

  try {
    heatctl::ExperimentConfig cfg = heatctl::load_config(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (args.paths >= 1) cfg.mc_paths = args.paths;
    heatctl::CommandOptions opts;
    opts.out_dir = args.out_dir;
    opts.quiet = args.quiet;

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "audit") return heatctl::cmd_audit(cfg, opts);
    if (name == "design") return heatctl::cmd_design(cfg, opts);
    if (name == "kernel") return heatctl::cmd_kernel(cfg, opts);
    if (name == "simulate") return heatctl::cmd_simulate(cfg, opts);
    if (name == "picard") return heatctl::cmd_picard(cfg, opts);
    if (name == "mc") return heatctl::cmd_mc(cfg, opts);
    std::cerr << "unknown subcommand\n";
    return heatctl::kExitConfig;
  } catch (const heatctl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return heatctl::kExitConfig;
  } catch (const heatctl::DesignRejected& e) {
    std::cerr << "design rejected: " << e.what() << "\n";
    return heatctl::kExitDesignRejected;
  } catch (const heatctl::BlowUpError& e) {
    std::cerr << "blow-up at t = " << e.time << ": " << e.what() << "\n";
    return heatctl::kExitBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return heatctl::kExitConfig;
  }
}
