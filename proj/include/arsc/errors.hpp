#pragma once

#include <stdexcept>
#include <string>

namespace arsc {

/// Raised when a model or configuration violates a structural requirement.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an integration or recursion leaves its admissible range.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace arsc
