#pragma once

#include <stdexcept>
#include <string>

namespace tiebreak {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

// Information matrix has a Cholesky pivot below the rank threshold,
// i.e. the design is under-identified.
struct SingularInformation : Error {
    using Error::Error;
};

struct NonIntegerBudget : Error {
    using Error::Error;
};

struct HeterogeneousStratum : Error {
    using Error::Error;
};

struct Infeasible : Error {
    using Error::Error;
};

struct NonConvergence : Error {
    using Error::Error;
};

struct TooLarge : Error {
    using Error::Error;
};

struct IngestError : Error {
    using Error::Error;
};

struct ZeroVariance : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace tiebreak
