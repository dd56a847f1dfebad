#pragma once

#include <string>
#include <vector>

namespace docres::cli {

// Full command-line surface; returns the process exit code
// (0 success, 2 usage/validation, 1 runtime failure).
int run(const std::vector<std::string>& args);

}  // namespace docres::cli
