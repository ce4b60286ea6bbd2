#pragma once

#include <string>
#include <vector>

namespace lckasr {

// Runs one CLI invocation (argv[0] excluded). Returns the process exit code:
// 0 success, 2 usage or configuration, 3 data, 4 numeric failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace lckasr
