#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fiberstrat::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_domain_error = 1;   // invalid rank list, empty fiber, ...
inline constexpr int exit_verification = 2;   // a verification check failed
inline constexpr int exit_usage = 64;         // bad arguments; help text printed

// One invocation of the tool.  args excludes the program name; all terminal
// output goes to the given streams (--out targets are written directly), so
// identical args (plus seed) give byte-identical output.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fiberstrat::cli
