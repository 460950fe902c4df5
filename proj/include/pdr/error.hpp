#pragma once

#include <stdexcept>
#include <string>

namespace pdr {

// Input data violates a record, score or parameter contract.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller asked for something the API or CLI does not accept.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pdr
