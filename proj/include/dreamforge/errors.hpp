#pragma once

#include <stdexcept>
#include <string>

namespace dreamforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// RLE runs do not describe a width*height grid.
class MalformedMask : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (wrong class, wrong source, bad length).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Data made a reduction meaningless: all-equal scores, empty masks, zero-norm vectors.
class DegenerateData : public Error {
public:
    using Error::Error;
};

/// Raised by provider clients. Transport failures and timeouts are retryable.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// A pipeline stage could not complete. The manifest stays resumable.
class StageFailure : public Error {
public:
    StageFailure(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class ExportError : public Error {
public:
    using Error::Error;
};

}  // namespace dreamforge
