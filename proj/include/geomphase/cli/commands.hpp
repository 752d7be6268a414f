#pragma once

#include <string>

#include "geomphase/cli/config.hpp"
#include "geomphase/cli/table.hpp"

namespace geomphase::cli {

struct RunResult {
    ResultTable table;
    std::string states_json;  // evolve only, empty otherwise
};

RunResult cmd_perturb(const RunConfig& cfg);
RunResult cmd_connection(const RunConfig& cfg);
RunResult cmd_evolve(const RunConfig& cfg);
RunResult cmd_compare(const RunConfig& cfg);
RunResult cmd_sweep(const RunConfig& cfg);

RunResult run_command(const RunConfig& cfg);

/// Runs the command, writes the table/metadata/state files and returns the
/// one-line JSON summary for stdout.
std::string run_and_write(const RunConfig& cfg);

}  // namespace geomphase::cli
