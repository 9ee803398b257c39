#pragma once

namespace lvct {

// Entry point behind the `lvct` binary; exposed so tests can drive the exact
// code path the executable runs. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace lvct
