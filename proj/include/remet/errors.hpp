#pragma once

#include <stdexcept>
#include <string>

namespace remet {

// Base class for every error raised by the library. The CLI maps IoError to
// exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Well-formed input carrying illegal values: out-of-range sub-scores,
// duplicate criterion ids, length mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A configuration that cannot be satisfied: unreachable tier band,
// zero-width quality range, mismatched resume config.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed file content (bad JSON, truncated line); message carries the
// line number where applicable.
class ParseError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure: missing file, unwritable path.
class IoError : public Error {
public:
    using Error::Error;
};

// NaN or infinite values where finite numbers are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Persisted artifact written by an incompatible format version.
class VersionError : public Error {
public:
    using Error::Error;
};

// A keyed lookup (external feature table) with no entry for the key.
class LookupError : public Error {
public:
    using Error::Error;
};

}  // namespace remet
