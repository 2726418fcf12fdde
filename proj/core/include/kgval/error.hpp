#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgval {

/// Base of every exception thrown by kgval.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// HTTP or network failure that survived transport-level retries.
class TransportError : public Error {
public:
    TransportError(int status, std::string body)
        : Error("transport error (status " + std::to_string(status) + "): " + body),
          status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

class RateLimited : public Error {
public:
    explicit RateLimited(std::chrono::milliseconds retry_after)
        : Error("rate limited; retry after " + std::to_string(retry_after.count()) + " ms"),
          retry_after_(retry_after) {}

    std::chrono::milliseconds retry_after() const noexcept { return retry_after_; }

private:
    std::chrono::milliseconds retry_after_;
};

class NotFound : public Error {
public:
    using Error::Error;
};

// Schema errors. Their what() text is fed back to the model on a reask.

class SchemaError : public Error {
public:
    using Error::Error;
};

class NoJsonFound : public SchemaError {
public:
    NoJsonFound() : SchemaError("no JSON object found in the response") {}
};

class MissingField : public SchemaError {
public:
    explicit MissingField(std::string name)
        : SchemaError("missing required field '" + name + "'"), field_(std::move(name)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InvalidVerdictLiteral : public SchemaError {
public:
    explicit InvalidVerdictLiteral(std::string got)
        : SchemaError("triple_is_valid must be true, false or \"Not enough information to say\"; got " +
                      got),
          got_(std::move(got)) {}

    const std::string& got() const noexcept { return got_; }

private:
    std::string got_;
};

class EmptyReason : public SchemaError {
public:
    EmptyReason() : SchemaError("field 'reason' must be a non-empty string") {}
};

class RetryExhausted : public Error {
public:
    RetryExhausted(int attempts, std::string last_raw, std::string last_parse_error)
        : Error("no parseable response after " + std::to_string(attempts) +
                " attempts: " + last_parse_error),
          attempts_(attempts), last_raw_(std::move(last_raw)),
          last_parse_error_(std::move(last_parse_error)) {}

    int attempts() const noexcept { return attempts_; }
    const std::string& last_raw() const noexcept { return last_raw_; }
    const std::string& last_parse_error() const noexcept { return last_parse_error_; }

private:
    int attempts_;
    std::string last_raw_;
    std::string last_parse_error_;
};

class ScriptExhausted : public Error {
public:
    explicit ScriptExhausted(std::size_t script_length)
        : Error("mock backend script exhausted after " + std::to_string(script_length) +
                " responses") {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t a, std::size_t b)
        : Error("embedding dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class ZeroVector : public Error {
public:
    ZeroVector() : Error("cosine similarity is undefined for an all-zero vector") {}
};

class EmptyText : public Error {
public:
    EmptyText() : Error("cannot embed empty text") {}
};

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, std::string why)
        : Error("line " + std::to_string(line) + ": " + why), line_(line), why_(std::move(why)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& why() const noexcept { return why_; }

private:
    std::size_t line_;
    std::string why_;
};

class UnknownFormat : public Error {
public:
    explicit UnknownFormat(const std::string& name) : Error("unknown dataset format '" + name + "'") {}
};

}  // namespace kgval
