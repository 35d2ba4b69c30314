#pragma once

#include <stdexcept>
#include <string>

namespace taildep {

// Base class for all taildep failures so callers can catch the library
// as a whole or individual conditions.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveDefinite : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    using Error::Error;
};

struct DimensionTooLarge : Error {
    using Error::Error;
};

struct AccuracyUnreachable : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ZeroLambda : Error {
    using Error::Error;
};

struct SequenceNotConverging : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct NotIdenticalLegs : Error {
    using Error::Error;
};

} // namespace taildep
