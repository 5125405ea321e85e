#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adlabel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// args excludes the program name. Normal output goes to `out`; the resolved
// config echo and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adlabel::cli
