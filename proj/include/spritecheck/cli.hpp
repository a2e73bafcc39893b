#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spritecheck {

// Exit codes shared by every verb.
inline constexpr int kExitPass = 0;
inline constexpr int kExitBuggy = 1;
inline constexpr int kExitError = 2;

// args excludes the program name. JSON results go to `out`, logs and usage
// text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace spritecheck
