#pragma once

#include <stdexcept>
#include <string>

namespace nslab {

/// Argument outside the mathematical domain of an operation (curve parameter
/// beyond t_max, negative arc length, unclamped genotype).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative method failed to converge on input where it should.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken internal bookkeeping, e.g. an offspring whose parent is unknown.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InsufficientDataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration. `key()` names the offending field path.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace nslab
