#pragma once

#include <iosfwd>

namespace mos {

/// Entry point of mosctl. Exit codes: 0 success, 1 usage, 2 invalid config,
/// 3 numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mos
