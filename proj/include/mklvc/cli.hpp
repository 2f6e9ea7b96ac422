#pragma once

#include <ostream>

namespace mklvc {

/// Entry point of the `mklvc` tool. Returns 0 on success, 1 on usage or
/// validation errors and 2 on numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mklvc
