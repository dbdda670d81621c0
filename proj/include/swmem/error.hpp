#pragma once

#include <stdexcept>
#include <string>

namespace swmem {

/// Invalid argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Small-angle spin-wave vector requested at zero detection angle.
class DegenerateGeometryError : public DomainError {
public:
    using DomainError::DomainError;
};

/// A derived probability fell outside [0, 1], or a rate model is singular.
class ModelOutOfRangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace swmem
