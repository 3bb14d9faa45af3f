#ifndef FEDCACHE_TOOLS_COMMANDS_HPP
#define FEDCACHE_TOOLS_COMMANDS_HPP

#include <ostream>

namespace fedcache::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `fedcache partition|run|sweep|report [flags]`. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fedcache::cli

#endif
