#pragma once

#include <stdexcept>
#include <string>

namespace vortex {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateFrameError : public DomainError {
public:
    using DomainError::DomainError;
};

class OutOfChartError : public DomainError {
public:
    using DomainError::DomainError;
};

class ProximityError : public DomainError {
public:
    using DomainError::DomainError;
};

class GeometricBreakdownError : public DomainError {
public:
    using DomainError::DomainError;
};

class SingularCurvatureError : public DomainError {
public:
    using DomainError::DomainError;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class AccuracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ResolutionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// 2 configuration, 3 domain, 4 numerical
inline int exit_code_for(const Error& e)
{
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DomainError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    return 1;
}

} // namespace vortex
