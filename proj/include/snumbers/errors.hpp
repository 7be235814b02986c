#pragma once

#include <stdexcept>
#include <string>

namespace snumbers {

/// Malformed input data: non-square or non-finite matrices, bad files.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Parameters outside the range where an operation is defined.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A required argument is missing or inconsistent with the request.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace snumbers
