// errors.hpp — Exception types raised by the fermitherm library

#pragma once

#include <stdexcept>
#include <string>

namespace fermitherm {

// Base class; every library failure derives from it so callers can catch once.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

// Adaptive quadrature ran out of panels. Carries the best estimate so
// partial results can still be reported.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double best_estimate, double error_estimate)
        : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

    double best_estimate() const noexcept { return best_estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double best_estimate_;
    double error_estimate_;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class SingularDecomposition : public Error {
public:
    using Error::Error;
};

class DivergentExpansion : public Error {
public:
    using Error::Error;
};

class DegenerateDistribution : public Error {
public:
    using Error::Error;
};

class NotAState : public Error {
public:
    using Error::Error;
};

class NotPSD : public Error {
public:
    using Error::Error;
};

class FlatObjective : public Error {
public:
    using Error::Error;
};

} // namespace fermitherm
