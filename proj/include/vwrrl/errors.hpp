#pragma once

#include <stdexcept>
#include <string>

namespace vwrrl {

/// Caller passed a malformed value (bad shape, out-of-range action, non-finite reward).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Object used in a state that does not permit the call (e.g. step after terminal).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical failure during training. `what()` carries the diagnostics dump.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid command-line or config-file usage.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace vwrrl
