#pragma once

#include <stdexcept>
#include <string>

namespace cardiocep {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File or socket failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed record in an ingestion format. `column` is 1-based, 0 when the
/// failure concerns the whole record (e.g. arity).
class FormatError : public Error {
public:
    FormatError(std::size_t column, std::string reason)
        : Error(column == 0 ? reason : "column " + std::to_string(column) + ": " + reason),
          column_(column), reason_(std::move(reason)) {}

    std::size_t column() const noexcept { return column_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t column_;
    std::string reason_;
};

} // namespace cardiocep
