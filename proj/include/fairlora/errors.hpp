#pragma once

#include <stdexcept>
#include <string>

namespace fairlora {

// Bad inputs: shape mismatches, out-of-range values, malformed files,
// misconfiguration. Maps to CLI exit code 2.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: divergence, non-PSD matrices, undefined rates.
// Maps to CLI exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairlora
