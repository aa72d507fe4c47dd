#pragma once

#include <stdexcept>
#include <string>

namespace dynnet {

// Configuration problems detected before or while setting up a run.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Field element with no inverse (zero).
struct ZeroInverse : std::domain_error {
    ZeroInverse() : std::domain_error("zero has no multiplicative inverse") {}
};

// Vector length does not match the basis layout.
struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// random_combination on an empty basis.
struct EmptyBasis : std::logic_error {
    EmptyBasis() : std::logic_error("random combination of an empty basis") {}
};

// sensing_transfer_trial called with a basis that does not sense the target.
struct PreconditionViolated : std::logic_error {
    explicit PreconditionViolated(const std::string& what) : std::logic_error(what) {}
};

// A custom schedule produced a disconnected round graph.
struct DisconnectedTopology : std::runtime_error {
    explicit DisconnectedTopology(const std::string& what) : std::runtime_error(what) {}
};

// A protocol emitted a message over the b-bit body budget, or was configured
// so that its fixed message layout cannot fit. Always a hard error.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Luby MIS simulation failed to decide every node within its phase budget.
struct MISFailure : std::runtime_error {
    explicit MISFailure(const std::string& what) : std::runtime_error(what) {}
};

// A gather/broadcast super-epoch delivered zero new tokens.
struct StallDetected : std::runtime_error {
    explicit StallDetected(const std::string& what) : std::runtime_error(what) {}
};

// Not enough sweep points for a scaling fit.
struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dynnet
