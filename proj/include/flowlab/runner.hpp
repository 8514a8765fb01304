#pragma once

#include "flowlab/config.hpp"
#include "flowlab/experiments.hpp"

namespace flowlab {

ExecPolicy config_exec(const RunConfig& cfg);

// params.x as a state of dimension d; a single value is broadcast.
VectorXd config_state(const RunConfig& cfg, Index d, double fallback = 1.0);

// Builds the study named by run.name from the config tables and runs it.
ExperimentResult run_experiment(const RunConfig& cfg);

}  // namespace flowlab
