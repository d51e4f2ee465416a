#pragma once

#include <stdexcept>
#include <string>

namespace tda {

// Common root so callers can catch anything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Integrator blew up (non-finite state); message names the step index.
class IntegrationError : public Error {
public:
    using Error::Error;
};

class KernelError : public Error {
public:
    using Error::Error;
};

// SPD factorization failed; message names the offending leading minor.
class FactorizationError : public Error {
public:
    using Error::Error;
};

class EigenSolverError : public Error {
public:
    using Error::Error;
};

// Posterior weights summed to (numerical) zero.
class DegenerateUpdateError : public Error {
public:
    using Error::Error;
};

class PartitionError : public Error {
public:
    using Error::Error;
};

// Density operator trace collapsed during evolution.
class StarvationError : public Error {
public:
    using Error::Error;
};

// Projective update conditioned on a zero-probability outcome.
class MeasurementConflictError : public Error {
public:
    using Error::Error;
};

class PersistenceError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public PersistenceError {
public:
    using PersistenceError::PersistenceError;
};

class BadVersionError : public PersistenceError {
public:
    using PersistenceError::PersistenceError;
};

class TruncatedFileError : public PersistenceError {
public:
    using PersistenceError::PersistenceError;
};

}  // namespace tda
