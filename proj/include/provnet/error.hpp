#pragma once

#include <stdexcept>
#include <string>

namespace provnet {

// Bad architecture / run configuration (shape mismatch, unknown scope, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-range input data (labels, frames, sidecar rows).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dataset-level failure: empty split, missing patch file, corrupt store.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API called out of order, e.g. backward() without a recorded forward().
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Non-finite values in gradients or loss.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace provnet
