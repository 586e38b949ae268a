#pragma once

#include <span>
#include <vector>
#include <string>

namespace wbb::cli {

/// Entry point of the `wbb` tool. Returns 0 on success, 2 on a usage error
/// (unknown flag or subcommand) and 1 on any other failure.
int dispatch(int argc, const char* const* argv);

/// Parses "lo:hi:step" into the inclusive arithmetic grid.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace wbb::cli
