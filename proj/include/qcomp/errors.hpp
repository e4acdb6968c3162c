#pragma once

#include <stdexcept>
#include <string>

namespace qcomp {

// Every failure raised by the library derives from Error so callers can catch
// one type; the subclasses let the CLI map failures onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand sizes or tensor dimensions do not line up.
struct DimensionError : Error {
    using Error::Error;
};

// A requested object cannot be built from the given parameters.
struct ConstructionError : Error {
    using Error::Error;
};

// The request is valid but exceeds a configured size cap.
struct CapabilityError : Error {
    using Error::Error;
};

// A root finder or optimizer could not satisfy its postconditions.
struct SolverError : Error {
    using Error::Error;
};

// An input violates a documented precondition (e.g. a state that should be
// classical-quantum is not).
struct ContractError : Error {
    using Error::Error;
};

// A named subsystem does not exist or is duplicated.
struct LabelError : Error {
    using Error::Error;
};

// Malformed or out-of-range user input.
struct InputError : Error {
    using Error::Error;
};

}  // namespace qcomp
