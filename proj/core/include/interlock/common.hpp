#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace interlock {

// Bad user-supplied configuration: unknown flags, malformed files, missing inputs.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally invalid domain object (angle out of range, impossible geometry, ...).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown at runtime: diverged training, violated stability bound, NaN.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, used for content fingerprints in manifests. Not cryptographic.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& s);

std::string hex_string(std::uint64_t v);

// Shortest decimal form that round-trips an IEEE double ("%.17g").
std::string format_double(double v);

}  // namespace interlock
