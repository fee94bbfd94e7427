#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace refgrowth::cli {

/// Runs one command line (without the program name). Returns the process
/// exit code; errors go to `err` as a single JSON line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace refgrowth::cli
