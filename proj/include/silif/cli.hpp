#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace silif {

// full command-line front end; returns the process exit code
// (0 success, 1 runtime failure, 2 usage error)
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace silif
