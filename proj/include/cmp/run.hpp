#pragma once

#include <iosfwd>

#include "cmp/config.hpp"

namespace cmp {

enum ExitCode : int { kExitOk = 0, kExitInputError = 1, kExitSolverError = 2 };

// Executes one subcommand and writes its artifacts under config.out_dir.
// Every run leaves status.txt behind: "complete" or "incomplete: <reason>".
int run(const RunConfig& config, std::ostream& log);

}  // namespace cmp
