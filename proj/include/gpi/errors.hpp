#pragma once

#include <stdexcept>
#include <string>

namespace gpi {

// Argument lies outside a function's mathematical domain.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A computation failed to reach its accuracy or internal-consistency target.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// The request is valid mathematics but outside what this implementation supports.
class CapabilityError : public std::runtime_error {
public:
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// A matrix that must be positive definite is not.
class NotPositiveDefinite : public NumericError {
public:
    explicit NotPositiveDefinite(const std::string& what) : NumericError(what) {}
};

} // namespace gpi
