// errors.hpp: exception hierarchy shared by all blochrabi modules

#pragma once

#include <stdexcept>
#include <string>

namespace blochrabi {

// Invalid or non-finite physical parameters.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the supported range of a numerical routine.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Violated precondition of a closed-form formula (e.g. flat-band formula with tau_a != tau_b).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Time integration or quadrature failed. Carries the time that was reached.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time_reached)
        : std::runtime_error(what + " (t = " + std::to_string(time_reached) + ")")
        , time_reached_(time_reached) {}

    double time_reached() const noexcept { return time_reached_; }

private:
    double time_reached_;
};

// A truncation or boundary monitor exceeded its threshold.
class AccuracyError : public std::runtime_error {
public:
    AccuracyError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}

    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// Period or peak extraction from simulated data failed.
class MeasurementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace blochrabi
