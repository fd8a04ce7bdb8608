#pragma once

#include <string>
#include <vector>

namespace bicl::cli {

/// Dispatches the bicl subcommands (generate, train, disentangle, eval,
/// gradcheck). `args` excludes the program name. Returns the process exit
/// code: 0 success, 1 usage error, 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args);

}  // namespace bicl::cli
