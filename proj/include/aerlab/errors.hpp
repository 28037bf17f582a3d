#pragma once

#include <stdexcept>
#include <string>

namespace aerlab {

// Invalid dimensions, bad config keys/values, unsupported tiers.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed runtime data: missing log-probs, empty batches, bad files.
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API preconditions broken by the caller (double init, k > n, negative lambda).
struct contract_error : std::logic_error {
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace aerlab
