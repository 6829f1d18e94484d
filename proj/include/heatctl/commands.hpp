#pragma once

#include <string>

#include "heatctl/config.hpp"

namespace heatctl {

// Exit codes shared by the CLI and the command layer.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitAuditFailed = 2;
inline constexpr int kExitDesignRejected = 3;
inline constexpr int kExitBlowUp = 4;

struct CommandOptions {
  std::string out_dir;  // empty: use config output.dir
  bool quiet = false;
};

int cmd_audit(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_design(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_kernel(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_picard(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_mc(const ExperimentConfig& cfg, const CommandOptions& opts);

} // namespace heatctl
