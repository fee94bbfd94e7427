#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refgrowth {

// Every failure surfaced by the toolkit carries one of these categories.
// The CLI maps them onto exit codes.
enum class ErrorCategory { config, io, numeric, network, data_quality };

std::string_view to_string(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

/// Argument outside the domain of a model quantity (t < t0, P*(t) = 0, ...).
class DomainError : public NumericError {
public:
    explicit DomainError(const std::string& what) : NumericError(what) {}
};

class NetworkError : public Error {
public:
    explicit NetworkError(const std::string& what) : Error(ErrorCategory::network, what) {}
};

class DataQualityError : public Error {
public:
    explicit DataQualityError(const std::string& what) : Error(ErrorCategory::data_quality, what) {}
};

}  // namespace refgrowth
