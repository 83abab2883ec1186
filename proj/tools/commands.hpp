#ifndef NFLOW_TOOLS_COMMANDS_HPP_
#define NFLOW_TOOLS_COMMANDS_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace nflow::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUnreadableInput = 1;
inline constexpr int kInvalidFlags = 2;
inline constexpr int kStrictParseFailure = 3;
inline constexpr int kUnknownUser = 4;

/// Runs the nflow command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

}  // namespace nflow::cli

#endif  // NFLOW_TOOLS_COMMANDS_HPP_
