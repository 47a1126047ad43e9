#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace detmask::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;

// Runs one `detmask` subcommand. args excludes the program name.
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace detmask::cli
