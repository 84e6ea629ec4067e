#pragma once

#include <string>
#include <vector>

namespace recode::cli {

/// Subcommands: train, eval, check {solver-oracle|prop1|prop2|safety},
/// diag b, sweep radius, ablate. Exit codes: 0 success, 1 check failure,
/// 2 usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace recode::cli
