#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace onionkep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitProtocol = 3;

// Runs one command line (args excludes the program name). Machine-readable
// results go to `out` as key=value lines, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onionkep::cli
