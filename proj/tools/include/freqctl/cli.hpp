#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace freqctl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

/// Runs one command. `args` excludes the program name. Regular output goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace freqctl::cli
