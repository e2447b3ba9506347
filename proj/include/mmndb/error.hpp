#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmndb {

/// Base for all engine errors. Callers that only care about "user data was
/// bad" versus "caller misused the API" can catch the two intermediate types.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: annotation files, store files, config files.
class DataError : public Error {
public:
    using Error::Error;
};

/// Violated precondition on an API call (dim mismatch, zero vector, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : DataError(what + " (line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ")"),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class FormatError : public DataError {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : DataError(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class IngestError : public DataError {
public:
    using DataError::DataError;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Query text matched none of the supported templates.
class UnsupportedQueryError : public Error {
public:
    explicit UnsupportedQueryError(std::string text)
        : Error("unsupported query: \"" + text + "\""), text_(std::move(text)) {}

    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

/// Query matched a template but the object slot was empty.
class QueryParseError : public Error {
public:
    using Error::Error;
};

/// MAX over an input with no numeric answers.
class EmptyAnswerError : public Error {
public:
    using Error::Error;
};

} // namespace mmndb
