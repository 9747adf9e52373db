#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "wkam/config.hpp"
#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"
#include "wkam/weakkam.hpp"

namespace wkam {

/// Process exit codes of the experiment runner.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,          ///< unreadable or invalid configuration
    kExitNonConvergence = 3,  ///< an iteration stopped at its cap (partial artifacts written)
    kExitInvariant = 4,       ///< a computed result breaks a law it must satisfy
};

ModelManifold model_from_config(const ExperimentConfig& cfg);
RadialGrid grid_from_config(const ExperimentConfig& cfg);
LaxOleinikParams solver_params_from_config(const ExperimentConfig& cfg, const ModelManifold& model,
                                           const RadialGrid& grid);

struct RunOptions {
    std::string out_dir;
    std::vector<std::string> plots;  ///< overrides outputs.plots when non-empty
};

/// Runs one subcommand (solve, flow, riccati, rigidity, verify), writes its artifacts under
/// opts.out_dir and returns the exit code. Library errors are mapped to exit codes and
/// reported on `log`.
int run_command(const std::string& subcommand, const ExperimentConfig& cfg, const RunOptions& opts,
                std::ostream& log);

}  // namespace wkam
