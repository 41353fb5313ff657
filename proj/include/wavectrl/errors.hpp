#pragma once

#include <stdexcept>
#include <string>

namespace wavectrl {

/// Invalid grid, region, solver or experiment configuration.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A caller broke an operation's precondition (shape mismatch, x0 inside the domain, ...).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Nonfinite values appeared while time stepping.
class BlowupError : public std::runtime_error {
public:
    BlowupError(const std::string& what, int level) : std::runtime_error(what), level_(level) {}
    int level() const noexcept { return level_; }

private:
    int level_;
};

}  // namespace wavectrl
