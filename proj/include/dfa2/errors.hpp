#pragma once

#include <stdexcept>

namespace dfa2 {

// Shape or dimension mismatch between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A tensor operation produced or received NaN/Inf.
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A query row has no active key position under the given mask.
struct FullyMaskedRowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A head was marked Cached before it ever computed an output.
struct CacheMissError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// RSE reference tensor has zero variance.
struct DegenerateReferenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Plan file violates the schema or its internal invariants.
struct PlanValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary dump read/write failure (bad magic, truncation, ...).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A built-in correctness check against a reference path failed.
struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dfa2
