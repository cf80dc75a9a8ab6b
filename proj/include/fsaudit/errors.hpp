#pragma once

#include <stdexcept>
#include <string>

namespace fsaudit {

// Invalid or inconsistent configuration (bad tag, infeasible sizes, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with input data (missing directories, malformed corpora, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/vector shape mismatches.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint of the wrong kind or a corrupt archive.
struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during training (divergence, non-finite gradients).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Wraps a failure with the pipeline stage and seed it occurred under.
struct StageError : std::runtime_error {
    std::string stage;
    unsigned long long seed;
    StageError(const std::string& stage_name, unsigned long long stage_seed,
               const std::string& msg)
        : std::runtime_error("stage '" + stage_name + "' (seed " +
                             std::to_string(stage_seed) + "): " + msg),
          stage(stage_name),
          seed(stage_seed) {}
};

}  // namespace fsaudit
