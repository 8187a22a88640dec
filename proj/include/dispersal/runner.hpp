#pragma once

#include "dispersal/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace dispersal {

struct RunOptions {
    std::optional<std::filesystem::path> out;  ///< overrides config.output; default "out/<experiment>"
    std::optional<std::uint64_t> seed;         ///< overrides config.seed
    std::ostream* log = nullptr;
};

/// Throws ConfigError when the config cannot drive its experiment
/// (for example s = 1 for an experiment that needs a fractional order).
void validate_for_experiment(const ExperimentConfig& config);

/// Runs one experiment and writes its artifacts plus summary.json.
/// Artifacts are written only after the experiment finishes; a module error
/// leaves a summary.json holding the error record and nothing else.
/// Returns 0 iff every pass flag holds.
int run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace dispersal
