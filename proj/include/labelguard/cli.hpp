#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace labelguard {

/// Command-line entry point. Returns 0 on success, 1 for usage or
/// configuration errors and 2 for runtime failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace labelguard
