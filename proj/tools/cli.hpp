#pragma once

#include <string>
#include <vector>

// Command-line front end. run() takes the arguments after the program name
// and returns the process exit code: 0 success, 1 runtime failure,
// 2 usage/config error.

namespace tlml::cli {

int run(const std::vector<std::string>& args);

}  // namespace tlml::cli
