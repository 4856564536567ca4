#pragma once

#include <iostream>

namespace prefchain::cli {

/// Entry point of the prefchain tool. Returns the process exit code:
/// 0 ok, 1 unexpected failure, 2 configuration error, 3 data error,
/// 4 provider error.
int run_cli(int argc, const char *const *argv, std::ostream &out = std::cout,
            std::ostream &err = std::cerr);

} // namespace prefchain::cli
