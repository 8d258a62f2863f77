#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace leafmetric::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kEmptyResult = 2;

/// Entry point shared by the executable and the tests. argv[0] is the
/// program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace leafmetric::cli
