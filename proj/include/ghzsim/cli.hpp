// Command-line front end. Subcommands: phase-scan, witness, stability,
// pair-tomo, coinc-bench, simulate-streams.
#pragma once

#include <string>
#include <vector>

namespace ghz {

/// Exit codes returned by run_cli.
enum ExitCode : int {
    kExitOk = 0,
    kExitRuntimeError = 1,
    kExitConfigError = 2,
    kExitAnalysisFailed = 3,  ///< outputs written, but a fit or estimate failed
};

/// Runs the CLI on argv-style arguments (args[0] is the program name).
int run_cli(const std::vector<std::string>& args);

}  // namespace ghz
