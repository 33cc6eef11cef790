#pragma once

#include <stdexcept>
#include <string>

namespace bec {

/// Inputs that violate a documented precondition (shapes, ranges, stochasticity).
class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Power iteration failed to settle, or the chain has no unique invariant law.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Configuration file problems. `key` is a dotted path into the document
/// ("step_sizes.alpha"); `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what, std::size_t line = 0)
        : std::runtime_error(format(key, what, line)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, const std::string& what, std::size_t line) {
        std::string out;
        if (line != 0) out += "line " + std::to_string(line) + ": ";
        if (!key.empty()) out += "'" + key + "': ";
        return out + what;
    }

    std::string key_;
    std::size_t line_;
};

} // namespace bec
