#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meg {

/// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory : int {
    config = 2,
    data = 3,
    numerical = 4,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

  private:
    ErrorCategory category_;
};

/// Invalid configuration or invalid argument values supplied by the caller.
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& message) : Error(ErrorCategory::config, message) {}
};

/// Malformed or inconsistent input data (parse errors, schema violations,
/// dangling references, missing upstream artifacts).
class DataError : public Error {
  public:
    explicit DataError(const std::string& message) : Error(ErrorCategory::data, message) {}
};

/// Numerical failures: non-convergence, divergence, NaN propagation.
class NumericalError : public Error {
  public:
    explicit NumericalError(const std::string& message) : Error(ErrorCategory::numerical, message) {}
};

/// Parse failure carrying the location of the first violation.
class ParseError : public DataError {
  public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : DataError(message + " (line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace meg
