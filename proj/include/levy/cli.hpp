#pragma once

#include <string>
#include <vector>

namespace levy {

const char* version();

/// Command-line entry point. Returns 0 on success, 2 when a requested
/// validation fails and 1 on usage, configuration or I/O errors.
int cli_main(const std::vector<std::string>& args);

}  // namespace levy
