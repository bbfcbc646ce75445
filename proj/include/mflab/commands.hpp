#pragma once

// Subcommands of the batch front end (check, simulate, mkv, poc, value,
// hausdorff, gbm, refine), shared by the command-line tool and the Python
// module.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mflab {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out;  // defaults to out/<command>
  bool force = false;
};

/// Names of the available subcommands, in display order.
const std::vector<std::string>& command_names();

/// Runs one subcommand; returns 0 on success, 1 on runtime or check failure,
/// 2 on usage or config errors. The one-line summaries go to `out`,
/// diagnostics to `err`.
int run_command(const std::string& command, const RunOptions& options, std::ostream& out,
                std::ostream& err);

}  // namespace mflab
