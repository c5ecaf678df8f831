#pragma once

#include <filesystem>
#include <string>

#include "rabi/config.hpp"

namespace rabi {

/// Exit codes of the experiment runner: 0 ok, 1 crash, 2 audit finding,
/// 3 config error, 4 solver non-convergence.
enum ExitCode : int {
  kOk = 0,
  kCrash = 1,
  kFinding = 2,
  kConfigError = 3,
  kNoConvergence = 4,
};

/// Runs one subcommand of the pipeline
/// certify -> ledger -> orbits -> flow -> audit -> report.
/// Artifacts are exchanged through the output directory; upstream artifacts
/// are computed on demand when missing.
int run_subcommand(const std::string& command, const ExperimentConfig& cfg,
                   const std::filesystem::path& out_dir);

}  // namespace rabi
