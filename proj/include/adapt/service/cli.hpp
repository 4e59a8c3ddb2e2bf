#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adapt::service {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// adaptctl entry point: chat, serve, worker, bench generate|run|judge|report,
// memory list|show|delete. Returns 0 on success, 2 on usage errors and 1 on
// runtime errors.
int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
                std::ostream& err);

}  // namespace adapt::service
