#pragma once

#include <stdexcept>
#include <string>

namespace pehsim {

/// Failure categories. The CLI maps each category to its own exit code.
enum class ErrorCategory {
    Config = 2,
    Simulation = 3,
    Io = 4,
    Usage = 5,
};

[[nodiscard]] inline std::string to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Config: return "config";
        case ErrorCategory::Simulation: return "simulation";
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Usage: return "usage";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class SimulationError : public Error {
public:
    explicit SimulationError(const std::string& what)
        : Error(ErrorCategory::Simulation, what) {}
};

class StepSizeUnderflow : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class NoSignChange : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class NotArmed : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class InsufficientCycle : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class DegenerateSweep : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class MismatchedScenarios : public Error {
public:
    explicit MismatchedScenarios(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

}  // namespace pehsim
