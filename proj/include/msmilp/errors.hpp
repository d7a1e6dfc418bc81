#pragma once

#include <stdexcept>
#include <string>

namespace msmilp {

// Base class for all toolkit errors. CLI maps subclasses to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad JSON, unknown fields, bad rational literals, bad CLI usage.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Array/matrix shapes inconsistent with the declared dimensions.
struct DimensionError : ParseError {
    explicit DimensionError(const std::string& what) : ParseError(what) {}
};

// Instance violates a modeling assumption the algorithms rely on
// (continuous linking variable, unbounded integer variable, bad probabilities).
struct AssumptionError : Error {
    explicit AssumptionError(const std::string& what) : Error(what) {}
};

// A value function or LP is unbounded below where boundedness is assumed.
struct UnboundedError : AssumptionError {
    explicit UnboundedError(const std::string& what) : AssumptionError(what) {}
};

// A big-M computation needs a finite box on a column that has none.
struct UnboundedBoxError : AssumptionError {
    explicit UnboundedBoxError(const std::string& what) : AssumptionError(what) {}
};

// A work or size limit was hit (node limits, pivot limits, lattice caps,
// iteration limits, rational magnitude caps).
struct LimitError : Error {
    explicit LimitError(const std::string& what) : Error(what) {}
};

// Rational magnitudes exceeded the configured bit limit.
struct NumericOverflow : LimitError {
    explicit NumericOverflow(const std::string& what) : LimitError(what) {}
};

// Enumeration lattice larger than the configured cap.
struct CapExceeded : LimitError {
    explicit CapExceeded(const std::string& what) : LimitError(what) {}
};

// Branch-and-bound node limit.
struct NodeLimit : LimitError {
    explicit NodeLimit(const std::string& what) : LimitError(what) {}
};

// Decomposition iteration limit.
struct IterationLimit : LimitError {
    explicit IterationLimit(const std::string& what) : LimitError(what) {}
};

// A vertex whose scenario-restricted active set is rank deficient; callers
// fall back to joint-space cut derivation.
struct DegenerateVertexError : Error {
    explicit DegenerateVertexError(const std::string& what) : Error(what) {}
};

// A dual function was requested from a tree with unsolved leaves.
struct TreeIncompleteError : Error {
    explicit TreeIncompleteError(const std::string& what) : Error(what) {}
};

} // namespace msmilp
