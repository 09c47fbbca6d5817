#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vwrrl {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the `vwrrl` tool (subcommands train, compare, sweep,
/// sparseness). `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "1,2,5", "1-5" or a mix ("1-3,7").
std::vector<unsigned long long> parse_seed_list(const std::string& text);

}  // namespace vwrrl
