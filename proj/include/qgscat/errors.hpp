#pragma once

#include <stdexcept>
#include <string>

namespace qgscat {

/// Base of every error raised by the library. Callers that only care about
/// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: unknown ids, bad arguments, inadmissible graphs.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidGraph : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class ContractLoop : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class Disconnected : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class NoLeads : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class InsufficientData : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Spectral failures: the requested point sits on (or too close to) a pole or
// a zero of one of the matrix functions. These are resampling conditions.

class SpectralError : public Error {
public:
    using Error::Error;
};

class ZeroEnergy : public SpectralError {
public:
    using SpectralError::SpectralError;
};

class SpectralSingularity : public SpectralError {
public:
    using SpectralError::SpectralError;
};

class SingularMatrix : public SpectralError {
public:
    using SpectralError::SpectralError;
};

class SingularFactor : public SpectralError {
public:
    using SpectralError::SpectralError;
};

class SingularSystem : public SpectralError {
public:
    using SpectralError::SpectralError;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

} // namespace qgscat
