#pragma once

#include <stdexcept>
#include <string>

namespace ham {

// Bad scalar arguments, out-of-range axes, invalid counts.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Tensor shape / channel-count mismatches.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf reaching a public boundary, divergence during training.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A hook or callback violated its contract (e.g. changed shapes).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Teacher trace missing an entry required by the modulation config.
struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown key, checkpoint/config mismatch).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File-format and filesystem failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ham
