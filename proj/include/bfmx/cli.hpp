#pragma once

#include <ostream>
#include <string>

namespace bfmx {

// One parsed invocation. Defaults here are the tool's documented defaults;
// the option parser in tools/ only overrides what the user passed.
struct RunConfig {
    std::string command;        // solve | audit | sweep | flip | recover
    std::string case_path;
    int branch = 0;             // 1-based; 0 means auto-detect (flip only)
    std::string format = "text";
    double tight_tol = 1e-5;
    double tol = 1e-9;
    int max_iter = 200;
    double epsilon_l = 1e-6;
    int workers = 0;            // 0 means hardware concurrency
    bool trace = false;
    bool strict = false;        // audit: non-zero exit when a condition fails
    bool force_recovery = false;
};

// Exit codes: 0 success, 1 model or usage error, 2 solver or recovery
// failure, 3 strict audit failure.
int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace bfmx
