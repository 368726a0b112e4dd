#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtrail {

// Root of all engine errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Value outside its permitted domain (score range, k = 0, empty merge input).
class DomainError : public Error {
public:
    using Error::Error;
};

// A trail modification would break strictly increasing timestamps.
class MonotonicityError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t position)
        : Error(what + " (at position " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// Invalid plan: unknown table/column, type mismatch, malformed node.
class PlanError : public Error {
public:
    using Error::Error;
};

// Aggregator used out of order (iterate after finalize, illegal status change).
class ProtocolError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

// Catalog is internally inconsistent (dangling off-table id, etc).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Broken engine invariant; indicates a bug rather than bad input.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace qtrail
