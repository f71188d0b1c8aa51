#pragma once

#include <iostream>

namespace graftnet {

/// Entry point of the `graftnet` tool. Returns 0 on success, 1 on a usage or
/// configuration error, 2 on a runtime failure.
int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace graftnet
