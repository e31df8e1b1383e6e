#pragma once

#include <stdexcept>
#include <string>

namespace petto {

/// Raised when a field turns non-finite mid-iteration (CFL violation,
/// diverging time step). Carries the step/loop index where it was caught.
class NumericalAbort : public std::runtime_error {
public:
    NumericalAbort(std::string field, long long step, const std::string& detail)
        : std::runtime_error("numerical abort in '" + field + "' at step " +
                             std::to_string(step) + ": " + detail),
          field_(std::move(field)), step_(step) {}

    const std::string& field() const { return field_; }
    long long step() const { return step_; }

private:
    std::string field_;
    long long step_;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace petto
