#pragma once

#include <stdexcept>
#include <string>

namespace dicekit {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments, shape mismatches, broken invariants on inputs.
class validation_error : public error {
public:
    using error::error;
};

/// Undefined or divergent quantities (e.g. the pure-diagonal monomial of an
/// infinite-mass coordination measure), and numeric guards treated as bugs.
class numeric_error : public error {
public:
    using error::error;
};

/// Operation not available for the given measure family or parameter regime.
class unsupported_error : public error {
public:
    using error::error;
};

/// Malformed or inconsistent configuration documents.
class config_error : public error {
public:
    using error::error;
};

/// Exceeding a documented resource cap (state-space or block-count limits).
class resource_error : public error {
public:
    using error::error;
};

/// A generator whose rows are not constant across extension classes: the
/// projection onto fewer coordinates is not Markov.
class lumpability_error : public error {
public:
    using error::error;
};

} // namespace dicekit
