#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace eqd::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kHypothesisViolated = 3, kNumericalFailure = 4 };

struct RunOptions {
    /// Overrides the [run] output directory when non-empty.
    std::string out;
    unsigned workers = 0;
    bool verbose = false;
    /// Restricts the configured tasks (dependencies are added back).
    std::optional<std::vector<std::string>> only;
    std::ostream* log = nullptr;
};

struct RunResult {
    int exit_code = kOk;
    std::string out_dir;
    nlohmann::ordered_json manifest;
};

/// Executes the tasks in dependency order and writes artifacts plus
/// manifest.json into the output directory.
RunResult run(const ExperimentConfig& config, const RunOptions& options);

/// Degree report of a map as JSON.
nlohmann::ordered_json degrees_json(const std::string& map_spec);

}  // namespace eqd::cli
