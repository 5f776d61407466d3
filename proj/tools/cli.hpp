#ifndef IAMA_TOOLS_CLI_HPP_
#define IAMA_TOOLS_CLI_HPP_

#include <string>
#include <vector>

namespace iama {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand; args excludes the program name.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

}  // namespace iama

#endif  // IAMA_TOOLS_CLI_HPP_
