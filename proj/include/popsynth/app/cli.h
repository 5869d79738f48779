#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace popsynth {

/// @brief Runs the command line in-process; args excludes the program name.
///
/// Returns the process exit code. Diagnostics go to @p err, command output to @p out.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace popsynth
