#pragma once

#include <stdexcept>
#include <string>

namespace fraclod {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed files, bad parameters, inconsistent config.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a result (non-SPD matrix,
/// singular constrained problem, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace fraclod
