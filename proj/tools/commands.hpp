#pragma once

namespace varopt::cli {

/// Parses arguments and runs one subcommand. Returns the process exit code.
int run(int argc, char** argv);

}  // namespace varopt::cli
