#pragma once

#include <stdexcept>
#include <string>

namespace prophetlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (instance files, G matrices).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A brute-force oracle or dense formulation was asked for more than it can enumerate.
class SizeLimit : public Error {
public:
    using Error::Error;
};

// The LP solver could not maintain pivot or feasibility tolerances.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

}  // namespace prophetlab
