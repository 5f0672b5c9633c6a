// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace restfuzz {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitNotReproduced = 1,
    kExitConfig = 2,
    kExitUnreachable = 3,
    kExitInternal = 4,
};

/// Runs the `restfuzz` command line; args[0] is the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace restfuzz
