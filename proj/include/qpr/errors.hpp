#pragma once

#include <stdexcept>
#include <string>

namespace qpr {

// Thrown when inputs violate an operation's preconditions.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Series of unequal length or mismatched period indices.
class AlignmentError : public DomainError {
public:
    using DomainError::DomainError;
};

// Estimation entry point called with fewer observations than the floor.
class SampleTooSmallError : public DomainError {
public:
    using DomainError::DomainError;
};

// Degenerate design matrix (constant predictor, zero dispersion, ...).
class RankDeficiencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sandwich covariance could not be formed (singular density-weighted Gram).
class SandwichError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Lookup table missing, malformed, or lacking a requested level.
class TableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input file problems; message names the offending row/column.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qpr
