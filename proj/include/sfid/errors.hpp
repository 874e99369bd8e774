#pragma once

#include <stdexcept>
#include <string>

namespace sfid {

// All library failures derive from sfid::Error so callers can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Value outside the domain an encoder accepts (e.g. value ≥ 2^width).
struct DomainError : Error {
    using Error::Error;
};

// Index or offset outside the addressable range.
struct RangeError : Error {
    using Error::Error;
};

// Input rejected during construction (unsorted keys, inner structure overflow, ...).
struct BuildError : Error {
    using Error::Error;
};

// Parameter combination violates a structural invariant.
struct ParameterError : Error {
    using Error::Error;
};

// Predecessor map built in a mode whose density precondition fails.
struct ModeError : Error {
    using Error::Error;
};

// Stored bits decode to something impossible.
struct CorruptionError : Error {
    using Error::Error;
};

// Malformed container file.
struct FormatError : Error {
    using Error::Error;
};

// Navigator picked a child that does not exist.
struct NavigatorError : Error {
    using Error::Error;
};

}  // namespace sfid
