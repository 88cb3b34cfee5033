#pragma once

#include <string>

#include "sledge/cli/config.hpp"

namespace sledge::cli {

struct CliOptions {
  std::string config_path;
  std::string out_override;  // --out
  int jobs = 1;              // --jobs
};

// All return process exit codes: 0 success, 2 config/schema error, 3 IO
// error.  Algorithm divergence is recorded in the summary, not an error.
int cmd_run(const CliOptions& opts);
int cmd_sweep(const CliOptions& opts);
int cmd_discrepancy(const CliOptions& opts);
int cmd_validate(const CliOptions& opts);

}  // namespace sledge::cli
