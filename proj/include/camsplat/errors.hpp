// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace camsplat {

// Invalid configuration values or unknown keys. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File format or filesystem failures. Maps to CLI exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered during optimization. Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    NumericalError(const std::string& what, long iteration)
        : std::runtime_error(what), iteration(iteration) {}
    long iteration = -1;
};

} // namespace camsplat
