#pragma once

#include <stdexcept>
#include <string>

namespace attnlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible with the requested operation.
struct ShapeError : Error {
    using Error::Error;
};

// Numeric preconditions violated (zero norms, out-of-bound norms, bad values).
struct DomainError : Error {
    using Error::Error;
};

// A softmax/loss row has nothing to normalize or average over.
struct DegenerateRowError : Error {
    using Error::Error;
};

// Configuration field combination is invalid for the requested model.
struct ConfigError : Error {
    using Error::Error;
};

// Command line / config file text could not be parsed.
struct ParseError : Error {
    using Error::Error;
};

// A parameter name was requested that the graph does not contain.
struct UnknownParameterError : Error {
    using Error::Error;
};

// File could not be read or written.
struct IoError : Error {
    using Error::Error;
};

// Training produced a non-finite loss; `step` is the 1-based step index.
struct TrainDivergedError : Error {
    int step;
    TrainDivergedError(int step_index, const std::string& what)
        : Error(what), step(step_index) {}
};

}  // namespace attnlab
