#pragma once

#include <vector>

#include "lrgame/harness/config.hpp"
#include "lrgame/harness/record.hpp"

namespace lrgame::harness {

struct RunOptions {
  bool timing = false;  // adds a wall_time_s column, which breaks byte-identical reruns
};

struct RunResult {
  std::vector<ExperimentRecord> records;
  int failed_cells = 0;
};

/// Fixed column set for an experiment; `error` is always last before the optional timing column.
std::vector<std::string> columns_for(Experiment experiment, bool timing);

/// Runs every cell on a worker pool. Rows come back in cell order; a failing
/// cell yields a row with its error text instead of aborting the run.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace lrgame::harness
