#pragma once

#include <stdexcept>
#include <string>

namespace adpetc {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or size disagreement between blocks; the message names the block.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf or otherwise out-of-domain numeric input.
class DomainError : public Error {
public:
    using Error::Error;
};

/// gamma^2 <= lambda_max(Dbar^T Dbar), or gamma <= 0.
class GainBoundError : public Error {
public:
    using Error::Error;
};

/// F11(r) singular somewhere on [0, h].
class AssumptionError : public Error {
public:
    using Error::Error;
};

/// A matrix expected to be positive semi-definite is not (beyond tolerance).
class NotPsdError : public Error {
public:
    using Error::Error;
};

/// Two independent computations of the same quantity disagree.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or certificate document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// No feasible point of the jump LMI on the searched range.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// The inner set is not contained in the performance set for the chosen eta_min.
class EnclosureError : public Error {
public:
    using Error::Error;
};

/// Certificate does not belong to the supplied model.
class MismatchError : public Error {
public:
    using Error::Error;
};

}  // namespace adpetc
