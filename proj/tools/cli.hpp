#pragma once

// Command-line front end. run() is the whole program minus process exit so
// tests can drive it in-process.

#include <ostream>
#include <string>
#include <vector>

namespace urysohn::cli {

enum ExitCode : int { kPass = 0, kAssertionFailure = 1, kInputError = 2 };

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace urysohn::cli
