#pragma once

namespace poisonlab {

// Full command-line driver behind the poisonlab binary. Returns the process
// exit code: 0 on success, 2 for configuration and usage errors, 3 when a
// library precondition is violated.
int cli_main(int argc, const char* const* argv);

}  // namespace poisonlab
